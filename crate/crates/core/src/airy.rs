//! Airy function `Ai` and its derivative on `[-15, 15]`.
//!
//! Near the origin both are summed from the Maclaurin series
//! `Ai = c1 f - c2 g`, `f = Σ 3^k (1/3)_k x^{3k} / (3k)!`,
//! `g = Σ 3^k (2/3)_k x^{3k+1} / (3k+1)!`. Further out the standard
//! asymptotic expansions in `zeta = (2/3) |x|^{3/2}` take over.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// `Ai(0) = 3^{-2/3} / Γ(2/3)`
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// `-Ai'(0) = 3^{-1/3} / Γ(1/3)`
pub const AIP0: f64 = 0.258_819_403_792_806_8;

pub const DOMAIN: (f64, f64) = (-15.0, 15.0);

// Series/asymptotic switch points. On the oscillatory side the asymptotic
// remainder behaves like exp(-2 zeta), so the series is kept out to -7.
const SERIES_RIGHT: f64 = 5.0;
const SERIES_LEFT: f64 = -7.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryValue {
    pub ai: f64,
    pub aip: f64,
}

pub fn airy(x: f64) -> Result<f64> {
    airy_pair(x).map(|v| v.ai)
}

pub fn airy_prime(x: f64) -> Result<f64> {
    airy_pair(x).map(|v| v.aip)
}

/// `Ai(x)` and `Ai'(x)` together.
pub fn airy_pair(x: f64) -> Result<AiryValue> {
    if !(DOMAIN.0..=DOMAIN.1).contains(&x) {
        return Err(Error::domain(format!("Airy argument {x} outside [-15, 15]")));
    }
    Ok(if x > SERIES_RIGHT {
        asymptotic_positive(x)
    } else if x < SERIES_LEFT {
        asymptotic_negative(-x)
    } else {
        maclaurin(x)
    })
}

fn maclaurin(x: f64) -> AiryValue {
    let x3 = x * x * x;
    // f, g and their derivatives, summed term by term.
    let (mut f, mut tf) = (1.0, 1.0);
    let (mut g, mut tg) = (x, x);
    let (mut fp, mut tfp) = (0.0, 0.5 * x * x);
    let (mut gp, mut tgp) = (1.0, 1.0);
    fp += tfp;
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        tgp *= x3 / ((k3 - 2.0) * k3);
        f += tf;
        g += tg;
        gp += tgp;
        if k > 1 {
            tfp *= x3 / ((k3 - 3.0) * (k3 - 1.0));
            fp += tfp;
        }
        let scale = f.abs() + g.abs() + 1.0;
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 * scale {
            break;
        }
    }
    AiryValue {
        ai: AI0 * f - AIP0 * g,
        aip: AI0 * fp - AIP0 * gp,
    }
}

/// Coefficients `u_k` and `v_k` of the asymptotic expansions.
fn uv_coefficients(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..count {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
    }
    (u, v)
}

/// Sums `Σ_k sign^k c_k z^{-k}` over `indices` with optimal truncation.
fn truncated_sum(coeffs: &[f64], zeta: f64, indices: impl Iterator<Item = usize>, alternate: bool) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (j, k) in indices.enumerate() {
        if k >= coeffs.len() {
            break;
        }
        let term = coeffs[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        sum += if alternate && j % 2 == 1 { -term } else { term };
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn asymptotic_positive(x: f64) -> AiryValue {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (u, v) = uv_coefficients(40);
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    let su = truncated_sum(&u, zeta, 0..u.len(), true);
    let sv = truncated_sum(&v, zeta, 0..v.len(), true);
    let q = x.powf(0.25);
    AiryValue {
        ai: pre / q * su,
        aip: -pre * q * sv,
    }
}

/// Oscillatory expansion of `Ai(-t)`, `Ai'(-t)` for large `t > 0`.
fn asymptotic_negative(t: f64) -> AiryValue {
    let zeta = 2.0 / 3.0 * t.powf(1.5);
    let (u, v) = uv_coefficients(80);
    let u_even = truncated_sum(&u, zeta, (0..u.len()).step_by(2), true);
    let u_odd = truncated_sum(&u, zeta, (1..u.len()).step_by(2), true);
    let v_even = truncated_sum(&v, zeta, (0..v.len()).step_by(2), true);
    let v_odd = truncated_sum(&v, zeta, (1..v.len()).step_by(2), true);
    let phase = zeta - FRAC_PI_4;
    let (s, c) = phase.sin_cos();
    let q = t.powf(0.25);
    let root_pi = PI.sqrt();
    AiryValue {
        ai: (c * u_even + s * u_odd) / (root_pi * q),
        aip: q * (s * v_even - c * v_odd) / root_pi,
    }
}

/// `∫_x^∞ Ai(t)^2 dt = Ai'(x)^2 - x Ai(x)^2`.
pub fn airy_sq_tail(x: f64) -> Result<f64> {
    let v = airy_pair(x)?;
    Ok(v.aip * v.aip - x * v.ai * v.ai)
}

/// `∫_x^∞ t Ai(t)^2 dt = (x Ai'(x)^2 - x^2 Ai(x)^2 - Ai(x) Ai'(x)) / 3`.
pub fn airy_sq_first_moment_tail(x: f64) -> Result<f64> {
    let v = airy_pair(x)?;
    Ok((x * v.aip * v.aip - x * x * v.ai * v.ai - v.ai * v.aip) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // (x, Ai(x), Ai'(x)) from a 30-digit arbitrary precision evaluation.
    const REFERENCE: [(f64, f64, f64); 18] = [
        (-15.0, 0.278_217_490_870_828_93, 0.272_374_204_308_642_02),
        (-10.0, 0.040_241_238_486_443_191, 0.996_265_044_132_790_06),
        (-7.5, 0.321_775_716_380_647_88, 0.318_809_506_698_554_6),
        (-5.0, 0.350_761_009_024_114_32, 0.327_192_818_554_443_14),
        (-4.9, 0.374_536_354_705_838_75, 0.146_957_427_310_956_73),
        (-2.0, 0.227_407_428_201_685_6, 0.618_259_020_741_691_4),
        (-1.0, 0.535_560_883_292_352_1, -0.010_160_567_116_645_209),
        (0.0, 0.355_028_053_887_817_24, -0.258_819_403_792_806_8),
        (0.5, 0.231_693_606_480_833_5, -0.224_910_532_664_683_9),
        (1.0, 0.135_292_416_312_881_42, -0.159_147_441_296_793_2),
        (3.0, 0.006_591_139_357_460_719, -0.011_912_976_705_951_318),
        (4.9, 0.000_135_992_117_015_067_43, -0.000_307_615_996_337_649_5),
        (5.0, 0.000_108_344_428_136_074_42, -0.000_247_413_890_868_462_48),
        (5.1, 0.000_086_132_427_064_788_51, -0.000_198_532_547_881_805_4),
        (6.0, 9.947_694_360_252_89e-6, -0.000_024_765_200_397_034_955),
        (8.0, 4.692_207_616_099_231_6e-8, -1.341_439_297_906_786_6e-7),
        (10.0, 1.104_753_255_289_868_6e-10, -3.520_633_676_738_923_6e-10),
        (15.0, 2.164_962_520_737_992_3e-18, -8.420_567_954_017_773e-18),
    ];

    #[test]
    fn matches_reference_values() {
        for (x, ai, aip) in REFERENCE {
            let v = airy_pair(x).unwrap();
            assert!((v.ai - ai).abs() < 1e-10, "Ai({x}) = {} vs {ai}", v.ai);
            assert!((v.aip - aip).abs() < 1e-10, "Ai'({x}) = {} vs {aip}", v.aip);
            // The right-hand expansion is accurate to exp(-2 zeta) relative.
            if x > 0.0 {
                let rel = if x >= 8.0 { 1e-12 } else { 1e-7 };
                assert_relative_eq!(v.ai, ai, max_relative = rel);
                assert_relative_eq!(v.aip, aip, max_relative = rel);
            }
        }
    }

    #[test]
    fn value_at_origin() {
        assert_relative_eq!(airy(0.0).unwrap(), 0.35502805, epsilon = 1e-8);
    }

    #[test]
    fn decays_and_stays_positive() {
        let (a3, a4, a5) = (airy(3.0).unwrap(), airy(4.0).unwrap(), airy(5.0).unwrap());
        assert!(a5 < a4 && a4 < a3 && a5 > 0.0);
        for x in [1.0, 2.0, 4.0, 7.0, 12.0] {
            let bound = (-2.0 * x * f64::sqrt(x) / 3.0).exp() / (2.0 * PI.sqrt() * x.powf(0.25));
            assert!(airy(x).unwrap() <= bound);
        }
    }

    #[test]
    fn out_of_domain() {
        assert!(airy(15.5).is_err());
        assert!(airy(-16.0).is_err());
        assert!(airy(f64::NAN).is_err());
    }

    #[test]
    fn satisfies_airy_equation() {
        // Richardson-extrapolated central difference of Ai'.
        let h = 0.005;
        let d = |x: f64, h: f64| (airy_prime(x + h).unwrap() - airy_prime(x - h).unwrap()) / (2.0 * h);
        let mut x = -14.9;
        while x <= 14.9 {
            let second = (4.0 * d(x, h / 2.0) - d(x, h)) / 3.0;
            let resid = second - x * airy(x).unwrap();
            assert!(resid.abs() < 1e-8, "residual {resid} at x = {x}");
            x += 0.01;
        }
    }

    #[test]
    fn branches_join_continuously() {
        for edge in [SERIES_LEFT, SERIES_RIGHT] {
            let a = maclaurin(edge);
            let b = if edge > 0.0 {
                asymptotic_positive(edge)
            } else {
                asymptotic_negative(-edge)
            };
            assert!((a.ai - b.ai).abs() < 1e-10 && (a.aip - b.aip).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_integrals() {
        // Compare the closed forms against direct quadrature of Ai^2 on [x, 15].
        for x in [2.0, 6.0, 8.0] {
            let r = crate::quad::integrate(|t| airy(t).unwrap().powi(2), x, 15.0, &[], 1e-18, 1000);
            let m = crate::quad::integrate(|t| t * airy(t).unwrap().powi(2), x, 15.0, &[], 1e-18, 1000);
            assert_relative_eq!(airy_sq_tail(x).unwrap(), r.value, max_relative = 1e-8);
            assert_relative_eq!(airy_sq_first_moment_tail(x).unwrap(), m.value, max_relative = 1e-8);
        }
    }
}
