use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tw_edge::spectrum::{IntervalSpec, ToeplitzSpec};
use tw_edge::{ModelSpec, SpectralMeasure};

use crate::CliError;

/// Population covariance, given inline or as a model file. Exactly one source is allowed.
#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// Banded Toeplitz covariance with first-row coefficients t0,t1,...
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_name = "T0,T1,..")]
    pub toeplitz: Option<Vec<f64>>,
    /// Identity covariance
    #[arg(long, alias = "base-id")]
    pub id: bool,
    /// Discrete spectrum as value:mass pairs, e.g. 10:0.3,1:0.7
    #[arg(long, value_name = "V:M,..")]
    pub atoms: Option<String>,
    /// Explicit eigenvalue list
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_name = "L1,L2,..")]
    pub eigenvalues: Option<Vec<f64>>,
    /// Eigenvalues evenly spread over [zeta, xi]
    #[arg(long, value_delimiter = ',', value_name = "ZETA,XI")]
    pub interval: Option<Vec<f64>>,
    /// Model file in key = value format
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Dimension p (overrides the dimension of a model file)
    #[arg(long)]
    pub p: Option<usize>,
}

fn usage(e: tw_edge::Error) -> CliError {
    CliError::Usage(e.to_string())
}

impl ModelArgs {
    pub fn sources(&self) -> usize {
        [
            self.toeplitz.is_some(),
            self.id,
            self.atoms.is_some(),
            self.eigenvalues.is_some(),
            self.interval.is_some(),
            self.model.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }

    fn need_p(&self, flag: &str) -> Result<usize, CliError> {
        self.p.ok_or_else(|| CliError::Usage(format!("--{flag} requires --p")))
    }

    /// Builds and validates the model. Every failure here is a usage error.
    pub fn resolve(&self) -> Result<(ModelSpec, SpectralMeasure), CliError> {
        match self.sources() {
            0 => {
                return Err(CliError::Usage(
                    "no model given: use one of --id, --toeplitz, --atoms, --eigenvalues, --interval, --model".into(),
                ))
            }
            1 => {}
            _ => return Err(CliError::Usage("more than one model source given".into())),
        }
        let spec = if self.id {
            ModelSpec::identity(self.need_p("id")?)
        } else if let Some(coeffs) = &self.toeplitz {
            ModelSpec::Toeplitz(ToeplitzSpec::new(coeffs.clone(), self.need_p("toeplitz")?).map_err(usage)?)
        } else if let Some(pairs) = &self.atoms {
            let p = self.need_p("atoms")?;
            let (values, masses) = parse_atoms(pairs)?;
            ModelSpec::Atoms { values, masses, p }
        } else if let Some(values) = &self.eigenvalues {
            if let Some(p) = self.p.filter(|&p| p != values.len()) {
                return Err(CliError::Usage(format!(
                    "--p {p} does not match {} eigenvalues",
                    values.len()
                )));
            }
            ModelSpec::Eigenvalues { values: values.clone() }
        } else if let Some(ends) = &self.interval {
            let [zeta, xi] = ends[..] else {
                return Err(CliError::Usage("--interval takes exactly two values ZETA,XI".into()));
            };
            ModelSpec::Interval(IntervalSpec::new(zeta, xi, self.need_p("interval")?).map_err(usage)?)
        } else {
            let path = self.model.as_ref().expect("one source is set");
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let spec = ModelSpec::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            match self.p {
                Some(p) if p != spec.p() => spec.with_dimension(p).map_err(usage)?,
                _ => spec,
            }
        };
        let measure = spec.measure().map_err(usage)?;
        Ok((spec, measure))
    }
}

pub fn parse_atoms(text: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut values = Vec::new();
    let mut masses = Vec::new();
    for pair in text.split(',') {
        let bad = || CliError::Usage(format!("bad atom `{pair}`: expected value:mass"));
        let (v, m) = pair.split_once(':').ok_or_else(bad)?;
        values.push(v.trim().parse().map_err(|_| bad())?);
        masses.push(m.trim().parse().map_err(|_| bad())?);
    }
    Ok((values, masses))
}
