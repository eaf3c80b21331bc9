//! Complex Wishart sampling with a general population covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Law of the standardized entries of the noise matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EntryLaw {
    /// `(g1 + i g2) / sqrt(2)` with independent standard normals.
    #[default]
    ComplexGaussian,
    /// Real standard normal entries.
    RealGaussian,
    /// Independent `±1/sqrt(2)` real and imaginary parts.
    ScaledRademacher,
    /// Real `±1` entries.
    RealRademacher,
}

impl EntryLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            EntryLaw::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * H, im * H)
            }
            EntryLaw::RealGaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
            EntryLaw::ScaledRademacher => {
                let bits: u32 = rng.random();
                let re = if bits & 1 == 0 { H } else { -H };
                let im = if bits & 2 == 0 { H } else { -H };
                Complex64::new(re, im)
            }
            EntryLaw::RealRademacher => Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0),
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, EntryLaw::ComplexGaussian | EntryLaw::ScaledRademacher)
    }
}

impl std::str::FromStr for EntryLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex-gaussian" => Ok(EntryLaw::ComplexGaussian),
            "real-gaussian" => Ok(EntryLaw::RealGaussian),
            "scaled-rademacher" => Ok(EntryLaw::ScaledRademacher),
            "real-rademacher" => Ok(EntryLaw::RealRademacher),
            other => Err(Error::domain(format!("unknown entry law `{other}`"))),
        }
    }
}

/// Hermitian square root `S` of the population covariance, `S S* = Sigma`.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceFactor {
    /// `Sigma = diag(lambda)`; stores `sqrt(lambda)`.
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl CovarianceFactor {
    /// Factor for a model. Spectral models use a diagonal covariance, since
    /// the law of the eigenvalues of `X* X` depends on `Sigma` only through
    /// its spectrum; Toeplitz models factor the literal matrix.
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        match model {
            ModelSpec::Toeplitz(t) => sqrt_covariance(&t.matrix()).map(CovarianceFactor::Dense),
            other => {
                let eigs = other.measure()?.expand()?;
                Ok(CovarianceFactor::Diagonal(eigs.iter().map(|l| l.sqrt()).collect()))
            }
        }
    }

    pub fn p(&self) -> usize {
        match self {
            CovarianceFactor::Diagonal(d) => d.len(),
            CovarianceFactor::Dense(m) => m.nrows(),
        }
    }

    /// `S` as a dense matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            CovarianceFactor::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            CovarianceFactor::Dense(m) => m.clone(),
        }
    }
}

/// Symmetric positive square root of a symmetric positive definite matrix.
pub fn sqrt_covariance(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return Err(Error::domain("covariance must be a nonempty square matrix"));
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let lambda_min = eig.eigenvalues.min();
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite { lambda_min });
    }
    let roots = eig.eigenvalues.map(f64::sqrt);
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// `n x p` matrix with i.i.d. rows `S g`, `g` a vector of standardized entries.
pub fn sample_data_matrix<R: Rng + ?Sized>(
    n: usize,
    factor: &CovarianceFactor,
    law: EntryLaw,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let p = factor.p();
    // Fill row-major so the draw order does not depend on storage layout.
    let mut g = DMatrix::<Complex64>::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            g[(i, j)] = law.sample(rng);
        }
    }
    match factor {
        CovarianceFactor::Diagonal(d) => {
            for (j, s) in d.iter().enumerate() {
                g.column_mut(j).scale_mut(*s);
            }
            g
        }
        // Rows x_i^T = g_i^T S^T = g_i^T S for symmetric S.
        CovarianceFactor::Dense(s) => &g * s.map(|v| Complex64::new(v, 0.0)),
    }
}

/// `X* X`
pub fn gram(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    x.ad_mul(x)
}

/// All eigenvalues of `X* X`, descending.
pub fn gram_eigenvalues(x: &DMatrix<Complex64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = gram(x).symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs
}

/// The `k` largest eigenvalues of `X* X`, descending.
pub fn top_eigenvalues(x: &DMatrix<Complex64>, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > x.ncols() {
        return Err(Error::domain(format!("k = {k} must be in 1..={}", x.ncols())));
    }
    let mut eigs = gram_eigenvalues(x);
    eigs.truncate(k);
    Ok(eigs)
}
