//! Population spectral distributions and the edge moments integrated against them.
//!
//! A [`SpectralMeasure`] is a finite weighted list of atoms. Explicit eigenvalue
//! lists, atomic mixtures, equally spaced intervals and symmetric banded
//! Toeplitz covariances all reduce to one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Relative tolerance under which two eigenvalues are merged into one atom.
pub const MERGE_RTOL: f64 = 1e-14;
const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lambda: f64,
    pub weight: f64,
}

/// Finite atomic measure, atoms sorted by `lambda` descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    p: usize,
}

fn same_lambda(a: f64, b: f64) -> bool {
    (a - b).abs() <= MERGE_RTOL * a.abs().max(b.abs())
}

impl SpectralMeasure {
    /// Empirical measure of an eigenvalue list: uniform weights `1/p`.
    pub fn from_eigenvalues(eigs: &[f64]) -> Result<Self> {
        if eigs.is_empty() {
            return Err(Error::domain("eigenvalue list is empty"));
        }
        if let Some((i, &v)) = eigs.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::domain(format!(
                "eigenvalue at index {i} is not a positive finite number ({v})"
            )));
        }
        let p = eigs.len();
        let mut sorted = eigs.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let unit = 1.0 / p as f64;
        let mut atoms: Vec<Atom> = Vec::new();
        for lambda in sorted {
            match atoms.last_mut() {
                Some(last) if same_lambda(last.lambda, lambda) => last.weight += unit,
                _ => atoms.push(Atom { lambda, weight: unit }),
            }
        }
        Ok(Self { atoms, p })
    }

    /// Atomic mixture with explicit masses; masses must sum to one.
    pub fn from_atoms(values: &[f64], masses: &[f64], p: usize) -> Result<Self> {
        if values.is_empty() || values.len() != masses.len() {
            return Err(Error::domain(format!(
                "need one mass per value (got {} values, {} masses)",
                values.len(),
                masses.len()
            )));
        }
        if p == 0 {
            return Err(Error::domain("dimension p must be at least 1"));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::domain(format!("atom value at index {i} is not positive ({v})")));
        }
        if let Some((i, &m)) = masses.iter().enumerate().find(|(_, m)| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::domain(format!("atom mass at index {i} is not positive ({m})")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::domain(format!("atom masses sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(masses.iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut atoms: Vec<Atom> = Vec::new();
        for (lambda, weight) in pairs {
            match atoms.last_mut() {
                Some(last) if same_lambda(last.lambda, lambda) => last.weight += weight,
                _ => atoms.push(Atom { lambda, weight }),
            }
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        Ok(Self { atoms, p })
    }

    /// Point mass at one: the identity covariance in dimension `p`.
    pub fn identity(p: usize) -> Result<Self> {
        Self::from_atoms(&[1.0], &[1.0], p)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn lambda_max(&self) -> f64 {
        self.atoms[0].lambda
    }

    pub fn lambda_min(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].lambda
    }

    /// Mass carried by the largest atom.
    pub fn top_mass(&self) -> f64 {
        self.atoms[0].weight
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Expands the atoms back into a `p`-element eigenvalue multiset, descending.
    ///
    /// Fails when some `weight * p` is not an integer count.
    pub fn expand(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.p);
        for a in &self.atoms {
            let count = a.weight * self.p as f64;
            let rounded = count.round();
            if (count - rounded).abs() > 1e-6 {
                return Err(Error::domain(format!(
                    "atom {} has mass {} which is not a multiple of 1/p (p = {})",
                    a.lambda, a.weight, self.p
                )));
            }
            out.extend(std::iter::repeat_n(a.lambda, rounded as usize));
        }
        if out.len() != self.p {
            return Err(Error::domain(format!(
                "atom counts add to {} eigenvalues, expected p = {}",
                out.len(),
                self.p
            )));
        }
        Ok(out)
    }

    /// `sum_i w_i (lambda_i c / (1 - lambda_i c))^k` for `k` in 1..=3.
    pub fn edge_moment(&self, c: f64, k: u32) -> Result<f64> {
        if !(1..=3).contains(&k) {
            return Err(Error::domain(format!("edge moment order must be 1, 2 or 3 (got {k})")));
        }
        self.check_pole(c)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| {
                let t = a.lambda * c;
                a.weight * (t / (1.0 - t)).powi(k as i32)
            })
            .sum())
    }

    /// Errors unless `c < 1 / lambda_max`.
    pub fn check_pole(&self, c: f64) -> Result<()> {
        let margin = 1.0 - self.lambda_max() * c;
        if margin > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(Error::Pole { c, margin })
        }
    }

    /// `sum_i w_i lambda_i^j / (1 - lambda_i c)^j`, the kernels of the
    /// derivatives of the saddle-point exponent.
    pub(crate) fn resolvent_power(&self, c: f64, j: i32) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * (a.lambda / (1.0 - a.lambda * c)).powi(j))
            .sum()
    }

    /// Measure of the base model enlarged by `extra` eigenvalues, in dimension `p + k`.
    pub fn with_added_eigenvalues(&self, extra: &[f64]) -> Result<Self> {
        if let Some((i, &v)) = extra.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::domain(format!(
                "added eigenvalue at index {i} is not positive ({v})"
            )));
        }
        let p = self.p as f64;
        let total = p + extra.len() as f64;
        let mut values: Vec<f64> = self.atoms.iter().map(|a| a.lambda).collect();
        let mut masses: Vec<f64> = self.atoms.iter().map(|a| a.weight * p / total).collect();
        for &v in extra {
            values.push(v);
            masses.push(1.0 / total);
        }
        // Renormalise against rounding so the mass check cannot trip.
        let sum: f64 = masses.iter().sum();
        masses.iter_mut().for_each(|m| *m /= sum);
        Self::from_atoms(&values, &masses, self.p + extra.len())
    }
}

/// Symmetric banded Toeplitz covariance with first row `(a_0, ..., a_m, 0, ...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzSpec {
    coefficients: Vec<f64>,
    p: usize,
}

impl ToeplitzSpec {
    pub fn new(coefficients: Vec<f64>, p: usize) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::domain("Toeplitz band needs at least a_0"));
        }
        if p == 0 {
            return Err(Error::domain("dimension p must be at least 1"));
        }
        if coefficients.len() > p {
            return Err(Error::domain(format!(
                "band width {} must be below p = {p}",
                coefficients.len() - 1
            )));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("Toeplitz coefficients must be finite"));
        }
        Ok(Self { coefficients, p })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `sum_k k |a_k|`; finite for any finite band.
    pub fn summability(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, a)| k as f64 * a.abs())
            .sum()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| {
            self.coefficients.get(i.abs_diff(j)).copied().unwrap_or(0.0)
        })
    }

    /// Eigenvalues of the `p x p` matrix, descending.
    pub fn raw_eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = SymmetricEigen::new(self.matrix()).eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| b.total_cmp(a));
        eigs
    }

    pub fn eigenvalues(&self) -> Result<SpectralMeasure> {
        let eigs = self.raw_eigenvalues();
        let lambda_min = eigs[eigs.len() - 1];
        if !(lambda_min > 0.0) {
            return Err(Error::NotPositiveDefinite { lambda_min });
        }
        SpectralMeasure::from_eigenvalues(&eigs)
    }

    /// `a(w) = a_0 + 2 sum_k a_k cos(k w)`.
    pub fn symbol(&self, omega: f64) -> f64 {
        self.coefficients[0]
            + 2.0
                * self.coefficients[1..]
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * omega).cos())
                    .sum::<f64>()
    }

    pub fn symbol_derivative(&self, omega: f64) -> f64 {
        -2.0 * self.coefficients[1..]
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let k = (k + 1) as f64;
                a * k * (k * omega).sin()
            })
            .sum::<f64>()
    }

    fn symbol_extremum(&self, sign: f64) -> (f64, f64) {
        // a is even and 2π-periodic, so [0, π] covers the range.
        let n = 4096.max(64 * self.coefficients.len());
        let h = PI / n as f64;
        let g = |w: f64| sign * self.symbol(w);
        let (best, _) =
            (0..=n).map(|i| (i, g(i as f64 * h))).fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
        // Golden-section refinement on the bracketing sample cell.
        let mut lo = (best as f64 - 1.0).max(0.0) * h;
        let mut hi = (best as f64 + 1.0).min(n as f64) * h;
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (g(x1), g(x2));
        for _ in 0..80 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = g(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = g(x1);
            }
        }
        let candidates = [(best as f64 * h, g(best as f64 * h)), (x1, f1), (x2, f2)];
        let (w, v) = candidates
            .into_iter()
            .fold((0.0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        (w, sign * v)
    }

    /// `(argmax, max)` of the symbol over `[0, π]`.
    pub fn symbol_max(&self) -> (f64, f64) {
        self.symbol_extremum(1.0)
    }

    /// `(argmin, min)` of the symbol over `[0, π]`.
    pub fn symbol_min(&self) -> (f64, f64) {
        self.symbol_extremum(-1.0)
    }

    /// `T(x) = ∫_{-π}^{π} (a(u) x / (1 - a(u) x))^2 du`, to absolute accuracy 1e-9.
    pub fn symbol_t_integral(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let (w_max, a_max) = self.symbol_max();
        let (w_min, a_min) = self.symbol_min();
        // The integrand peaks where a(u) x is largest.
        let (w_peak, top) = if x > 0.0 {
            (w_max, a_max * x)
        } else {
            (w_min, a_min * x)
        };
        if !(top < 1.0) || !x.is_finite() {
            return Err(Error::Pole {
                c: x,
                margin: 1.0 - top,
            });
        }
        let integrand = |u: f64| {
            let t = self.symbol(u) * x;
            let r = t / (1.0 - t);
            r * r
        };
        let r = quad::integrate(integrand, -PI, PI, &[-w_peak, 0.0, w_peak], 1e-10, 100_000);
        Ok(r.value)
    }

    /// Intervals of `[0, π]` where `|a'(w)| < tol` persistently, i.e. flat
    /// stretches of the symbol which put atoms into its limiting distribution.
    ///
    /// Isolated critical points (where `a'` merely crosses zero) are not reported.
    pub fn symbol_flat_spots(&self, tol: f64) -> Vec<(f64, f64)> {
        let n = 4096.max(64 * self.coefficients.len());
        let h = PI / n as f64;
        let min_len = 1e-3 * PI;
        let mut spots = Vec::new();
        let mut start: Option<f64> = None;
        for i in 0..=n {
            let w = i as f64 * h;
            let flat = self.symbol_derivative(w).abs() < tol;
            match (flat, start) {
                (true, None) => start = Some(w),
                (false, Some(s)) => {
                    if w - h - s >= min_len {
                        spots.push((s, w - h));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            if PI - s >= min_len {
                spots.push((s, PI));
            }
        }
        spots
    }
}

/// `p` equally spaced eigenvalues on `[zeta, xi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    zeta: f64,
    xi: f64,
    p: usize,
}

impl IntervalSpec {
    pub fn new(zeta: f64, xi: f64, p: usize) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::domain(format!(
                "interval lower end must be positive (zeta = {zeta})"
            )));
        }
        if !(xi > zeta) || !xi.is_finite() {
            return Err(Error::domain(format!(
                "interval needs zeta < xi < inf (got {zeta}, {xi})"
            )));
        }
        if p == 0 {
            return Err(Error::domain("dimension p must be at least 1"));
        }
        Ok(Self { zeta, xi, p })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Eigenvalues including both endpoints; a single eigenvalue sits at the midpoint.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.p == 1 {
            return vec![0.5 * (self.zeta + self.xi)];
        }
        let step = (self.xi - self.zeta) / (self.p - 1) as f64;
        (0..self.p).map(|i| self.xi - step * i as f64).collect()
    }

    pub fn measure(&self) -> Result<SpectralMeasure> {
        SpectralMeasure::from_eigenvalues(&self.eigenvalues())
    }
}
