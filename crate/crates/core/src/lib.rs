//! Tracy–Widom edge approximation for the largest eigenvalue of complex
//! sample covariance matrices with a general population covariance.

// `!(x > 0.0)` style guards are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod airy;
pub mod edge;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod ode;
pub mod quad;
pub mod spectrum;
pub mod tracy_widom;
pub mod wishart;

pub use edge::{EdgeParams, SolverConfig};
pub use error::{Error, Result};
pub use model::ModelSpec;
pub use montecarlo::{run_edge_monte_carlo, SimConfig, SimReport};
pub use spectrum::{SpectralMeasure, ToeplitzSpec};
pub use tracy_widom::TwDistribution;
pub use wishart::EntryLaw;
