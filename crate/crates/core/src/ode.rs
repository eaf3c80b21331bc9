//! Adaptive Dormand–Prince 5(4) integration for small fixed-size systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// Fifth-order weights equal the last row of A (FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible |h| before the integration is declared unstable.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }

    /// Advances `y` from `x0` to `x1` (either direction). `h` carries the
    /// step-size guess in and the last accepted step size out.
    pub fn advance<const N: usize, F>(&self, f: &F, x0: f64, x1: f64, y: &mut [f64; N], h: &mut f64) -> Result<usize>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let dir = (x1 - x0).signum();
        let mut x = x0;
        let mut step = h.abs().max(self.h_min) * dir;
        let mut steps = 0;
        let mut k = [[0.0; N]; 7];
        while (x1 - x) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::StepCollapse { x, h: step });
            }
            let last = (x + step - x1) * dir >= 0.0;
            let hh = if last { x1 - x } else { step };

            k[0] = f(x, y);
            for s in 1..7 {
                let mut ys = *y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    *yi += hh * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                k[s] = f(x + C[s] * hh, &ys);
            }
            let mut y5 = *y;
            let mut err = 0.0f64;
            for i in 0..N {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] = y[i] + hh * d5;
                let scale = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                let e = (hh * (d5 - d4)).abs() / scale;
                err = if y5[i].is_finite() && e.is_finite() {
                    err.max(e)
                } else {
                    f64::INFINITY
                };
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                x = if last { x1 } else { x + hh };
                *y = y5;
                steps += 1;
                if !last {
                    step = hh * factor;
                }
                *h = hh.abs().max(step.abs());
            } else {
                step = hh * factor.min(1.0);
                if step.abs() < self.h_min {
                    return Err(Error::StepCollapse { x, h: step });
                }
            }
        }
        Ok(steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth() {
        let f = |_x: f64, y: &[f64; 1]| [y[0]];
        let mut y = [1.0];
        let mut h = 0.1;
        Dopri5::new(1e-12).advance(&f, 0.0, 2.0, &mut y, &mut h).unwrap();
        assert_relative_eq!(y[0], 2f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut y = [0.0, 1.0];
        let mut h = 0.1;
        Dopri5::new(1e-12).advance(&f, 0.0, -10.0, &mut y, &mut h).unwrap();
        assert!((y[0] - (-10f64).sin()).abs() < 1e-9);
        assert!((y[1] - (-10f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn blow_up_collapses() {
        // y' = y^2, y(0) = 1 explodes at x = 1.
        let f = |_x: f64, y: &[f64; 1]| [y[0] * y[0]];
        let mut y = [1.0];
        let mut h = 0.1;
        let r = Dopri5::new(1e-10).advance(&f, 0.0, 2.0, &mut y, &mut h);
        assert!(matches!(r, Err(Error::StepCollapse { .. })));
    }
}
