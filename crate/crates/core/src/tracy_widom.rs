//! The GUE Tracy–Widom law `F0` through the Hastings–McLeod solution of
//! Painlevé II, `q'' = x q + 2 q^3` with `q(x) ~ Ai(x)` as `x -> +inf`.
//!
//! `F0(s) = exp(-J(s))` with `J(s) = ∫_s^∞ (x - s) q(x)^2 dx = I2(s) - s I1(s)`,
//! `I1(s) = ∫_s^∞ q^2` and `I2(s) = ∫_s^∞ x q^2`. The table carries
//! `(q, q', I1, J)` as one ODE state, using `J' = -I1` and `I1' = -q^2`.
//!
//! The connection problem is unstable to the left: perturbations grow like
//! `exp((2√2/3) |x|^{3/2})`. Left of `x_match` the table therefore follows
//! the asymptotic expansion `q(x) = sqrt(-x/2) (1 + Σ b_k x^{-3k})` instead
//! of the integrated solution. `F0` is below `1e-12` there.

use std::io::Write;
use std::sync::OnceLock;

use crate::airy;
use crate::error::{Error, Result};
use crate::ode::Dopri5;

/// Coefficients `b_k` of `q(-t) ~ sqrt(t/2) (1 + Σ b_k t^{-3k})`.
const LEFT_SERIES: [f64; 8] = [
    -1.0 / 8.0,
    -73.0 / 128.0,
    -10657.0 / 1024.0,
    -13_912_277.0 / 32768.0,
    -8_045_883_943.0 / 262_144.0,
    -14_518_451_390_349.0 / 4_194_304.0,
    -18_847_128_706_420_641.0 / 33_554_432.0,
    -266_287_398_541_797_779_277.0 / 2_147_483_648.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PainleveConfig {
    /// Right end, where `q = Ai` is imposed.
    pub x_start: f64,
    pub x_end: f64,
    /// Relative local error tolerance of the integrator.
    pub tol: f64,
    /// Left of this point the asymptotic expansion replaces integration.
    pub x_match: f64,
    /// Table spacing.
    pub grid_step: f64,
}

impl Default for PainleveConfig {
    fn default() -> Self {
        Self {
            x_start: 8.0,
            x_end: -12.0,
            tol: 1e-10,
            x_match: -7.0,
            grid_step: 1.0 / 64.0,
        }
    }
}

/// Tabulated Hastings–McLeod solution and TW2 distribution on a uniform grid.
#[derive(Debug, Clone)]
pub struct TwDistribution {
    config: PainleveConfig,
    grid: Vec<f64>,
    q: Vec<f64>,
    qp: Vec<f64>,
    i1: Vec<f64>,
    /// `J = I2 - x I1 = -ln F0`
    j: Vec<f64>,
    /// Relative gap between the integrated `q` and the left expansion at `x_match`.
    match_gap: f64,
}

fn left_expansion(x: f64) -> (f64, f64) {
    let t = -x;
    let inv3 = t.powi(-3);
    let mut w = 1.0;
    let mut dw = 0.0;
    let mut power = 1.0;
    let mut last = f64::INFINITY;
    for (k, b) in LEFT_SERIES.iter().enumerate() {
        power *= inv3;
        let term = b * power;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        w += term;
        dw += -3.0 * (k + 1) as f64 * term / t;
    }
    let root = (0.5 * t).sqrt();
    let q = root * w;
    // dq/dx = -dq/dt
    let dq_dt = w / (4.0 * root) + root * dw;
    (q, -dq_dt)
}

fn painleve_rhs(x: f64, y: &[f64; 4]) -> [f64; 4] {
    let q = y[0];
    [y[1], x * q + 2.0 * q * q * q, -q * q, -y[2]]
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

impl TwDistribution {
    /// Builds the table with the default configuration.
    pub fn new() -> Result<Self> {
        Self::solve(PainleveConfig::default())
    }

    /// Shared default table, built on first use.
    pub fn standard() -> &'static TwDistribution {
        static TABLE: OnceLock<TwDistribution> = OnceLock::new();
        TABLE.get_or_init(|| Self::new().expect("default Painlevé table integrates"))
    }

    pub fn solve(config: PainleveConfig) -> Result<Self> {
        let PainleveConfig {
            x_start,
            x_end,
            tol,
            x_match,
            grid_step,
        } = config;
        if !(x_start >= 6.0 && x_start <= airy::DOMAIN.1) {
            return Err(Error::domain(format!("x_start = {x_start} must lie in [6, 15]")));
        }
        if !(x_end >= -12.0 && x_end < x_start) {
            return Err(Error::domain(format!("x_end = {x_end} must lie in [-12, x_start)")));
        }
        if !(tol > 0.0 && tol < 1e-3) {
            return Err(Error::domain(format!("tolerance {tol} must be in (0, 1e-3)")));
        }
        if !(grid_step > 0.0) {
            return Err(Error::domain("grid step must be positive"));
        }
        let cells = ((x_start - x_end) / grid_step).round() as usize;
        if ((x_start - x_end) / grid_step - cells as f64).abs() > 1e-9 {
            return Err(Error::domain("grid step must divide x_start - x_end"));
        }
        let node = |i: usize| x_start - i as f64 * grid_step;

        let ai = airy::airy_pair(x_start)?;
        let i1_tail = airy::airy_sq_tail(x_start)?;
        let i2_tail = airy::airy_sq_first_moment_tail(x_start)?;
        let mut state = [ai.ai, ai.aip, i1_tail, i2_tail - x_start * i1_tail];

        let mut grid = Vec::with_capacity(cells + 1);
        let mut q = Vec::with_capacity(cells + 1);
        let mut qp = Vec::with_capacity(cells + 1);
        let mut i1 = Vec::with_capacity(cells + 1);
        let mut j = Vec::with_capacity(cells + 1);
        let mut push = |x: f64, s: &[f64; 4]| {
            grid.push(x);
            q.push(s[0]);
            qp.push(s[1]);
            i1.push(s[2]);
            j.push(s[3]);
        };
        push(x_start, &state);

        let stepper = Dopri5 {
            rtol: tol,
            atol: 1e-300,
            h_min: 1e-10,
            max_steps: 10_000_000,
        };
        let mut h = grid_step / 4.0;
        let mut i = 0;
        while i < cells && node(i + 1) >= x_match - 1e-12 {
            stepper.advance(&painleve_rhs, node(i), node(i + 1), &mut state, &mut h)?;
            i += 1;
            push(node(i), &state);
        }

        let mut match_gap = 0.0;
        if i < cells {
            let x = node(i);
            let (q_left, _) = left_expansion(x);
            match_gap = (state[0] - q_left).abs() / q_left;
            // Continue I1 and J with q taken from the expansion.
            let rhs = |x: f64, y: &[f64; 2]| {
                let (q, _) = left_expansion(x);
                [-q * q, -y[0]]
            };
            let mut tail = [state[2], state[3]];
            while i < cells {
                stepper.advance(&rhs, node(i), node(i + 1), &mut tail, &mut h)?;
                i += 1;
                let (ql, qpl) = left_expansion(node(i));
                push(node(i), &[ql, qpl, tail[0], tail[1]]);
            }
        }

        // Store ascending in x.
        for v in [&mut grid, &mut q, &mut qp, &mut i1, &mut j] {
            v.reverse();
        }
        let table = Self {
            config,
            grid,
            q,
            qp,
            i1,
            j,
            match_gap,
        };
        if let Some(k) = table.q.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::StepCollapse {
                x: table.grid[k],
                h: 0.0,
            });
        }
        Ok(table)
    }

    pub fn config(&self) -> &PainleveConfig {
        &self.config
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn f0_values(&self) -> Vec<f64> {
        self.j.iter().map(|j| (-j).exp()).collect()
    }

    pub fn match_gap(&self) -> f64 {
        self.match_gap
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = self.range();
        s >= lo && s <= hi
    }

    /// Cell index and clamped abscissa.
    fn locate(&self, s: f64) -> (usize, f64) {
        let (lo, hi) = self.range();
        let s = if s.is_nan() { lo } else { s.clamp(lo, hi) };
        let h = self.config.grid_step;
        let k = (((s - lo) / h).floor() as usize).min(self.grid.len() - 2);
        (k, s)
    }

    /// Hastings–McLeod `q(x)`.
    pub fn q(&self, x: f64) -> f64 {
        let (k, x) = self.locate(x);
        hermite(
            self.grid[k],
            self.grid[k + 1],
            self.q[k],
            self.q[k + 1],
            self.qp[k],
            self.qp[k + 1],
            x,
        )
    }

    /// `I1(s) = ∫_s^∞ q^2`
    pub fn i1(&self, s: f64) -> f64 {
        let (k, s) = self.locate(s);
        let d0 = -self.q[k] * self.q[k];
        let d1 = -self.q[k + 1] * self.q[k + 1];
        hermite(self.grid[k], self.grid[k + 1], self.i1[k], self.i1[k + 1], d0, d1, s)
    }

    /// `I2(s) = ∫_s^∞ x q^2`
    pub fn i2(&self, s: f64) -> f64 {
        self.log_cdf_neg(s) + s * self.i1(s)
    }

    fn log_cdf_neg(&self, s: f64) -> f64 {
        let (k, s) = self.locate(s);
        hermite(
            self.grid[k],
            self.grid[k + 1],
            self.j[k],
            self.j[k + 1],
            -self.i1[k],
            -self.i1[k + 1],
            s,
        )
    }

    /// `F0(s)`. Arguments outside the table saturate to the endpoint values.
    pub fn cdf(&self, s: f64) -> f64 {
        (-self.log_cdf_neg(s)).exp().clamp(0.0, 1.0)
    }

    /// `F0'(s) = F0(s) I1(s)`
    pub fn density(&self, s: f64) -> f64 {
        if !self.contains(s) {
            return 0.0;
        }
        self.cdf(s) * self.i1(s)
    }

    /// Inverse CDF for `prob` in `[1e-6, 1 - 1e-6]`.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        if !(1e-6..=1.0 - 1e-6).contains(&prob) {
            return Err(Error::domain(format!("probability {prob} outside [1e-6, 1 - 1e-6]")));
        }
        // Work with J = -ln F0, which is decreasing in s.
        let target = -prob.ln();
        let k = self.j.partition_point(|&j| j > target);
        if k == 0 || k >= self.grid.len() {
            return Err(Error::domain(format!("probability {prob} outside the tabulated range")));
        }
        let (mut lo, mut hi) = (self.grid[k - 1], self.grid[k]);
        let mut s = 0.5 * (lo + hi);
        for _ in 0..100 {
            let resid = self.log_cdf_neg(s) - target;
            if resid > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            // Newton on J with slope -I1, kept inside the bracket.
            let next = s + resid / self.i1(s);
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - s).abs() < 1e-15 * (1.0 + s.abs()) {
                s = next;
                break;
            }
            s = next;
        }
        Ok(s)
    }

    /// Writes `x,q,F0` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,q,F0")?;
        for ((x, q), j) in self.grid.iter().zip(&self.q).zip(&self.j) {
            writeln!(out, "{x},{q:.17e},{:.17e}", (-j).exp())?;
        }
        Ok(())
    }
}

/// `F0(s)` from the shared default table.
pub fn tw_cdf(s: f64) -> f64 {
    TwDistribution::standard().cdf(s)
}

/// Quantile of `F0` from the shared default table.
pub fn tw_quantile(prob: f64) -> Result<f64> {
    TwDistribution::standard().quantile(prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_boundary_matches_airy() {
        let tw = TwDistribution::standard();
        let q8 = tw.q(8.0);
        let ai8 = airy::airy(8.0).unwrap();
        assert!((q8 - ai8).abs() < 1e-8);
        assert!((q8 / ai8 - 1.0).abs() < 1e-6);
        for x in [6.0, 6.5, 7.0, 7.5, 8.0] {
            assert!((tw.q(x) - airy::airy(x).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn table_invariants() {
        let tw = TwDistribution::standard();
        assert_eq!(tw.range(), (-12.0, 8.0));
        assert!(tw.q_values().iter().all(|&q| q > 0.0));
        let f0 = tw.f0_values();
        assert!(f0.windows(2).all(|w| w[0] <= w[1]));
        assert!(f0[0] < 1e-3);
        assert!(f0[f0.len() - 1] > 1.0 - 1e-10);
        assert!(tw.match_gap() < 1e-4, "gap {}", tw.match_gap());
    }

    #[test]
    fn tight_tolerance_closes_the_match_gap() {
        let t = TwDistribution::solve(PainleveConfig {
            tol: 1e-14,
            ..PainleveConfig::default()
        })
        .unwrap();
        assert!(t.match_gap() < 1e-6, "gap {}", t.match_gap());
    }

    #[test]
    fn grows_to_the_left() {
        let tw = TwDistribution::standard();
        assert!(tw.q(-6.0) > tw.q(0.0) && tw.q(0.0) > tw.q(6.0));
        // Leading left asymptotics sqrt(-x/2)
        assert!((tw.q(-10.0) / 5f64.sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn self_convergence_at_origin() {
        let coarse = TwDistribution::standard();
        let fine = TwDistribution::solve(PainleveConfig {
            tol: 1e-12,
            ..PainleveConfig::default()
        })
        .unwrap();
        assert!((coarse.q(0.0) - fine.q(0.0)).abs() < 1e-8);
    }

    #[test]
    fn known_cdf_values() {
        // Pairs of two-decimal quantiles and probabilities from the standard TW2 table.
        for (s, p) in [(-3.73, 0.01), (-2.90, 0.10), (-1.81, 0.50), (0.48, 0.99)] {
            assert!((tw_cdf(s) - p).abs() < 0.02, "F0({s}) = {}", tw_cdf(s));
        }
        assert!(tw_cdf(8.0) > 1.0 - 1e-10);
        assert_eq!(tw_cdf(100.0), tw_cdf(8.0));
        assert_eq!(tw_cdf(-100.0), tw_cdf(-12.0));
    }

    #[test]
    fn quantiles() {
        let median = tw_quantile(0.5).unwrap();
        assert!((-1.83..=-1.75).contains(&median), "{median}");
        let q95 = tw_quantile(0.95).unwrap();
        assert!((-0.27..=-0.19).contains(&q95), "{q95}");
        for s in [-3.0, -1.0, 0.0] {
            assert!((tw_quantile(tw_cdf(s)).unwrap() - s).abs() < 1e-6);
        }
        for p in [0.001, 0.3, 0.77, 0.999] {
            assert!((tw_cdf(tw_quantile(p).unwrap()) - p).abs() <= 1e-8);
        }
        assert!(tw_quantile(0.0).is_err());
        assert!(tw_quantile(1.0 - 1e-8).is_err());
    }

    #[test]
    fn density_is_nonnegative_and_integrates() {
        let tw = TwDistribution::standard();
        let f0 = tw.f0_values();
        let h = tw.config().grid_step;
        for w in f0.windows(3) {
            assert!((w[2] - w[0]) / (2.0 * h) >= -1e-10);
        }
        let r = crate::quad::integrate(|s| tw.density(s), -12.0, 8.0, &[-2.0], 1e-10, 10_000);
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(TwDistribution::solve(PainleveConfig {
            x_start: 4.0,
            ..Default::default()
        })
        .is_err());
        assert!(TwDistribution::solve(PainleveConfig {
            x_end: -13.0,
            ..Default::default()
        })
        .is_err());
        assert!(TwDistribution::solve(PainleveConfig {
            grid_step: 0.3,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn pure_integration_diverges_far_left() {
        // Without the expansion the unstable direction takes over before -12.
        let cfg = PainleveConfig {
            x_match: -12.0,
            ..PainleveConfig::default()
        };
        match TwDistribution::solve(cfg) {
            Err(Error::StepCollapse { .. }) => {}
            Ok(t) => {
                let (q, _) = left_expansion(-12.0);
                assert!((t.q(-12.0) - q).abs() > 1e-3 * q);
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        TwDistribution::standard().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + TwDistribution::standard().grid().len());
        assert!(text.starts_with("x,q,F0\n-12,"));
    }
}
