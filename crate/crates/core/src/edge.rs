//! Critical point, centering and scaling of the largest sample eigenvalue.
//!
//! For a population measure `H` and dimensions `(n, p)` the critical point `c`
//! is the unique root in `(0, 1/lambda_1)` of
//! `∫ (λc / (1 - λc))^2 dH(λ) = n/p`. Given `c`,
//!
//! ```text
//! mu      = (1/c)   (1 + (p/n) ∫ λc/(1-λc) dH)
//! sigma^3 = (1/c^3) (1 + (p/n) ∫ (λc/(1-λc))^3 dH)
//! ```
//!
//! and `(l_1 - n mu) / (sigma n^{1/3})` is approximately TW2 distributed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::SpectralMeasure;

/// Tolerances used by the solver and the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative bracket width at which bisection hands over to Newton.
    pub bisection_rtol: f64,
    /// Relative Newton step size at which the root is accepted.
    pub newton_rtol: f64,
    pub max_iterations: usize,
    /// Minimum acceptable `1 - lambda_1 c`.
    pub margin_min: f64,
    /// Relative half-width of the critical band around `1/c`.
    pub chi_tol: f64,
    /// Upper threshold reported against `lambda_1`.
    pub lambda1_max: f64,
    /// Lower threshold reported against `lambda_p`.
    pub lambdap_min: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            bisection_rtol: 1e-3,
            newton_rtol: 1e-14,
            max_iterations: 500,
            margin_min: 0.02,
            chi_tol: 1e-6,
            lambda1_max: f64::INFINITY,
            lambdap_min: 0.0,
        }
    }
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::domain(format!("n and p must be positive (n = {n}, p = {p})")));
    }
    Ok(())
}

/// `h(c) - n/p` and `h'(c)` where `h` is the second edge moment.
fn moment_and_slope(h: &SpectralMeasure, c: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut slope = 0.0;
    for a in h.atoms() {
        let t = a.lambda * c;
        let d = 1.0 - t;
        let r = t / d;
        value += a.weight * r * r;
        slope += a.weight * 2.0 * a.lambda * t / (d * d * d);
    }
    (value, slope)
}

/// Unique root of the second edge moment equal to `n/p` in `(0, 1/lambda_max)`.
pub fn solve_c(h: &SpectralMeasure, n: usize, p: usize) -> Result<f64> {
    solve_c_with(h, n, p, &SolverConfig::default())
}

pub fn solve_c_with(h: &SpectralMeasure, n: usize, p: usize, cfg: &SolverConfig) -> Result<f64> {
    solve_c_from(h, n, p, 0.0, 1.0 / h.lambda_max(), cfg)
}

/// Root search started from an arbitrary interval `[lo, hi]` inside
/// `[0, 1/lambda_max]`. The interval is widened to the full domain on the
/// side(s) where it fails to bracket the root.
pub fn solve_c_from(h: &SpectralMeasure, n: usize, p: usize, lo: f64, hi: f64, cfg: &SolverConfig) -> Result<f64> {
    check_dims(n, p)?;
    let pole = 1.0 / h.lambda_max();
    if !(0.0 <= lo && lo < hi && hi <= pole) {
        return Err(Error::domain(format!(
            "starting bracket [{lo}, {hi}] is not inside [0, {pole}]"
        )));
    }
    let target = n as f64 / p as f64;
    let f = |c: f64| moment_and_slope(h, c).0 - target;

    let (mut lo, mut hi) = (lo, hi);
    if lo > 0.0 && f(lo) > 0.0 {
        hi = lo;
        lo = 0.0;
    }
    if hi < pole && f(hi) < 0.0 {
        lo = hi;
        hi = pole;
    }

    // Bisection stage. `hi` may be the pole itself, where f = +inf.
    let mut iterations = 0;
    while hi - lo > cfg.bisection_rtol * hi && iterations < cfg.max_iterations {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    // Newton from the right end: h is increasing and convex, so iterates
    // approach the root monotonically from above. Bisect if a step escapes.
    let mut c = if hi < pole { hi } else { 0.5 * (lo + hi) };
    while iterations < cfg.max_iterations {
        iterations += 1;
        let (value, slope) = moment_and_slope(h, c);
        let resid = value - target;
        if resid == 0.0 {
            return Ok(c);
        }
        if resid < 0.0 {
            lo = lo.max(c);
        } else {
            hi = hi.min(c);
        }
        let mut next = c - resid / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - c).abs();
        c = next;
        if step <= cfg.newton_rtol * c {
            return Ok(c);
        }
    }
    Ok(c)
}

/// `mu = (1/c) (1 + (p/n) * first edge moment)`.
pub fn compute_mu(h: &SpectralMeasure, n: usize, p: usize, c: f64) -> Result<f64> {
    check_dims(n, p)?;
    let m1 = h.edge_moment(c, 1)?;
    Ok((1.0 + p as f64 / n as f64 * m1) / c)
}

/// `sigma = ((1/c^3) (1 + (p/n) * third edge moment))^{1/3}`.
pub fn compute_sigma(h: &SpectralMeasure, n: usize, p: usize, c: f64) -> Result<f64> {
    check_dims(n, p)?;
    let m3 = h.edge_moment(c, 3)?;
    Ok(((1.0 + p as f64 / n as f64 * m3) / (c * c * c)).cbrt())
}

/// Solved critical point with its centering and scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    pub c: f64,
    pub mu: f64,
    pub sigma: f64,
    /// `lambda_1 * c`
    pub alpha1: f64,
    /// `n / p`
    pub gamma_sq: f64,
    pub n: usize,
    pub p: usize,
}

impl EdgeParams {
    pub fn solve(h: &SpectralMeasure, n: usize, p: usize) -> Result<Self> {
        Self::solve_with(h, n, p, &SolverConfig::default())
    }

    pub fn solve_with(h: &SpectralMeasure, n: usize, p: usize, cfg: &SolverConfig) -> Result<Self> {
        let c = solve_c_with(h, n, p, cfg)?;
        Ok(Self {
            c,
            mu: compute_mu(h, n, p, c)?,
            sigma: compute_sigma(h, n, p, c)?,
            alpha1: h.lambda_max() * c,
            gamma_sq: n as f64 / p as f64,
            n,
            p,
        })
    }

    /// `1 - lambda_1 c`
    pub fn margin(&self) -> f64 {
        1.0 - self.alpha1
    }

    /// `(l_1 - n mu) / (sigma n^{1/3})`
    pub fn rescale(&self, l1: f64) -> f64 {
        let n = self.n as f64;
        (l1 - n * self.mu) / (self.sigma * n.cbrt())
    }

    /// Inverse of [`EdgeParams::rescale`].
    pub fn unscale(&self, s: f64) -> f64 {
        let n = self.n as f64;
        n * self.mu + s * self.sigma * n.cbrt()
    }
}

/// Relative residuals of the saddle-point conditions at `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    /// `|f'(c)| / mu`
    pub first: f64,
    /// `|f''(c)| c^2`
    pub second: f64,
    /// `|f'''(c) - 2 sigma^3| / (2 sigma^3)`
    pub third: f64,
}

impl Stationarity {
    pub fn max(&self) -> f64 {
        self.first.max(self.second).max(self.third)
    }
}

/// Evaluates the derivatives of the (per-sample) saddle-point exponent
///
/// ```text
/// f'(z)   = -mu + 1/z   + (p/n) ∫ λ/(1-λz) dH
/// f''(z)  = -1/z^2      + (p/n) ∫ (λ/(1-λz))^2 dH
/// f'''(z) =  2/z^3      + (p/n) ∫ 2 (λ/(1-λz))^3 dH
/// ```
///
/// at `z = c`, where the first two should vanish and the third should equal `2 sigma^3`.
pub fn stationarity_check(h: &SpectralMeasure, params: &EdgeParams) -> Result<Stationarity> {
    let c = params.c;
    h.check_pole(c)?;
    let ratio = params.p as f64 / params.n as f64;
    let d1 = -params.mu + 1.0 / c + ratio * h.resolvent_power(c, 1);
    let d2 = -1.0 / (c * c) + ratio * h.resolvent_power(c, 2);
    let d3 = 2.0 / (c * c * c) + ratio * 2.0 * h.resolvent_power(c, 3);
    let s3 = 2.0 * params.sigma.powi(3);
    Ok(Stationarity {
        first: d1.abs() / params.mu,
        second: d2.abs() * c * c,
        third: (d3 - s3).abs() / s3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

/// Finite-sample report on the assumptions behind the edge approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGReport {
    pub n_over_p: f64,
    pub ratio_ok: bool,
    pub lambda1: f64,
    pub lambdap: f64,
    /// `1 - lambda_1 c`; `None` if the solve failed.
    pub alpha1_margin: Option<f64>,
    /// Mass of the top atom.
    pub top_mass: f64,
    /// `1 / (sqrt(nu)/gamma + 1)`, an upper bound on `lambda_1 c`.
    pub atom_bound: f64,
    pub checks: Vec<Check>,
}

impl ClassGReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

// Slack on the atom bound; the bound is attained exactly for a single atom.
const ATOM_BOUND_SLACK: f64 = 1e-10;

pub fn diagnose_class_g(h: &SpectralMeasure, n: usize, p: usize, cfg: &SolverConfig) -> Result<ClassGReport> {
    check_dims(n, p)?;
    let gamma_sq = n as f64 / p as f64;
    let lambda1 = h.lambda_max();
    let lambdap = h.lambda_min();
    let nu = h.top_mass();
    let atom_bound = 1.0 / (nu.sqrt() / gamma_sq.sqrt() + 1.0);

    let mut checks = vec![
        Check {
            name: "n/p >= 1".into(),
            pass: gamma_sq >= 1.0,
            value: gamma_sq,
            threshold: 1.0,
        },
        Check {
            name: "lambda_1 bounded".into(),
            pass: lambda1 <= cfg.lambda1_max,
            value: lambda1,
            threshold: cfg.lambda1_max,
        },
        Check {
            name: "lambda_p away from 0".into(),
            pass: lambdap > cfg.lambdap_min,
            value: lambdap,
            threshold: cfg.lambdap_min,
        },
    ];

    let alpha1_margin = match solve_c_with(h, n, p, cfg) {
        Ok(c) => {
            let alpha1 = lambda1 * c;
            let margin = 1.0 - alpha1;
            checks.push(Check {
                name: "1 - lambda_1 c".into(),
                pass: margin >= cfg.margin_min,
                value: margin,
                threshold: cfg.margin_min,
            });
            checks.push(Check {
                name: "lambda_1 c <= atom bound".into(),
                pass: alpha1 <= atom_bound + ATOM_BOUND_SLACK,
                value: alpha1,
                threshold: atom_bound,
            });
            Some(margin)
        }
        Err(_) => {
            checks.push(Check {
                name: "solve c".into(),
                pass: false,
                value: f64::NAN,
                threshold: 0.0,
            });
            None
        }
    };

    Ok(ClassGReport {
        n_over_p: gamma_sq,
        ratio_ok: gamma_sq >= 1.0,
        lambda1,
        lambdap,
        alpha1_margin,
        top_mass: nu,
        atom_bound,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeClass {
    pub value: f64,
    pub regime: Regime,
    /// `value - threshold`
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeReport {
    /// `1/c` of the base model.
    pub threshold: f64,
    pub c: f64,
    pub chi_tol: f64,
    pub spikes: Vec<SpikeClass>,
    pub k_critical: usize,
    /// Critical point of the enlarged model; only computed when no spike is supercritical.
    pub c_tilde: Option<f64>,
    pub warnings: Vec<String>,
}

impl SpikeReport {
    pub fn any_supercritical(&self) -> bool {
        self.spikes.iter().any(|s| s.regime == Regime::Supercritical)
    }
}

/// Labels each added eigenvalue against the threshold `1/c` of the base model.
///
/// Spikes within `chi_tol * threshold` of the threshold are critical. The
/// sharp boundary is only reachable up to that tolerance at finite `(n, p)`.
pub fn classify_spikes(
    base: &SpectralMeasure,
    n: usize,
    p: usize,
    spikes: &[f64],
    chi_tol: f64,
) -> Result<SpikeReport> {
    if let Some((i, &s)) = spikes.iter().enumerate().find(|(_, s)| !(**s >= base.lambda_max())) {
        return Err(Error::domain(format!(
            "spike at index {i} ({s}) is below lambda_1 of the base model ({})",
            base.lambda_max()
        )));
    }
    if !(chi_tol >= 0.0) {
        return Err(Error::domain(format!("chi_tol must be non-negative (got {chi_tol})")));
    }
    let c = solve_c(base, n, p)?;
    let threshold = 1.0 / c;
    let band = chi_tol * threshold;
    let classes: Vec<SpikeClass> = spikes
        .iter()
        .map(|&value| {
            let distance = value - threshold;
            let regime = if distance.abs() <= band {
                Regime::Critical
            } else if distance < 0.0 {
                Regime::Subcritical
            } else {
                Regime::Supercritical
            };
            SpikeClass {
                value,
                regime,
                distance,
            }
        })
        .collect();
    let k_critical = classes.iter().filter(|s| s.regime == Regime::Critical).count();

    let mut warnings = Vec::new();
    let c_tilde = if classes.iter().any(|s| s.regime == Regime::Supercritical) {
        for s in classes.iter().filter(|s| s.regime == Regime::Supercritical) {
            warnings.push(format!(
                "spike {} exceeds 1/c = {threshold:.6}: outside the scope of the edge theory, no limit law claimed",
                s.value
            ));
        }
        None
    } else if spikes.is_empty() {
        None
    } else {
        let enlarged = base.with_added_eigenvalues(spikes)?;
        let c_tilde = solve_c(&enlarged, n, p + spikes.len())?;
        if !(c_tilde < c) {
            warnings.push(format!("enlarged critical point {c_tilde} is not below c = {c}"));
        }
        Some(c_tilde)
    };

    Ok(SpikeReport {
        threshold,
        c,
        chi_tol,
        spikes: classes,
        k_critical,
        c_tilde,
        warnings,
    })
}
