//! Adaptive Dormand–Prince 5(4) integrator for complex-valued linear and
//! nonlinear systems. Steps are clipped so that every requested output time
//! is hit exactly; no dense-output interpolation is involved.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-9,
            abs: 1e-11,
        }
    }
}

impl Tolerances {
    pub fn strict() -> Self {
        Self {
            rel: 1e-11,
            abs: 1e-13,
        }
    }
}

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

// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct DormandPrince {
    pub tol: Tolerances,
    pub max_steps: usize,
    pub h_max: Option<f64>,
}

impl Default for DormandPrince {
    fn default() -> Self {
        Self::new(Tolerances::default())
    }
}

impl DormandPrince {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            max_steps: 50_000_000,
            h_max: None,
        }
    }

    /// Integrates `y' = rhs(t, y)` from `t = 0` with `y(0) = y0`, returning the
    /// state at every time in `grid` (sorted, nonnegative). `project` is applied
    /// to the state after every accepted step.
    pub fn integrate<F, P>(
        &self,
        mut rhs: F,
        y0: &[Complex64],
        grid: &[f64],
        mut project: P,
    ) -> Result<Vec<Vec<Complex64>>>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
        P: FnMut(&mut [Complex64]),
    {
        check_grid(grid)?;
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(grid.len());

        let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
        let mut stage = vec![Complex64::new(0.0, 0.0); n];
        let mut y_new = vec![Complex64::new(0.0, 0.0); n];

        let t_end = grid.last().copied().unwrap_or(0.0);
        let mut h = if t_end > 0.0 {
            self.initial_step(&mut rhs, &y, t_end)
        } else {
            0.0
        };
        let mut steps = 0usize;

        for &target in grid {
            while t < target {
                if steps >= self.max_steps {
                    return Err(Error::Stiffness { t, h });
                }
                let remaining = target - t;
                let clipped = h >= remaining;
                let h_try = if clipped { remaining } else { h };
                let h_min = 1e-13 * t.abs().max(1.0);
                if h_try < h_min && !clipped {
                    return Err(Error::Stiffness { t, h: h_try });
                }

                rhs(t, &y, &mut k[0]);
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for (j, kj) in k.iter().enumerate().take(s) {
                            let a = A[s][j];
                            if a != 0.0 {
                                acc += kj[i] * (a * h_try);
                            }
                        }
                        stage[i] = acc;
                    }
                    rhs(t + C[s] * h_try, &stage, &mut k[s]);
                    if s == 6 {
                        y_new.copy_from_slice(&stage);
                    }
                }

                let mut err_sq = 0.0;
                for i in 0..n {
                    let mut e = Complex64::new(0.0, 0.0);
                    for (s, ks) in k.iter().enumerate() {
                        if E[s] != 0.0 {
                            e += ks[i] * E[s];
                        }
                    }
                    e *= h_try;
                    let scale_re = self.tol.abs + self.tol.rel * y[i].re.abs().max(y_new[i].re.abs());
                    let scale_im = self.tol.abs + self.tol.rel * y[i].im.abs().max(y_new[i].im.abs());
                    err_sq += (e.re / scale_re).powi(2) + (e.im / scale_im).powi(2);
                }
                let err = (err_sq / (2 * n).max(1) as f64).sqrt();
                steps += 1;

                if err <= 1.0 || h_try < h_min {
                    t = if clipped { target } else { t + h_try };
                    std::mem::swap(&mut y, &mut y_new);
                    project(&mut y);
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    // A clipped step says nothing about the natural step size.
                    if !clipped || h_try * factor > h {
                        h = h_try * factor;
                    }
                } else {
                    h = h_try * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                    if h < h_min {
                        return Err(Error::Stiffness { t, h });
                    }
                }
                if let Some(h_max) = self.h_max {
                    h = h.min(h_max);
                }
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    fn initial_step<F>(&self, rhs: &mut F, y: &[Complex64], t_end: f64) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let mut f0 = vec![Complex64::new(0.0, 0.0); y.len()];
        rhs(0.0, y, &mut f0);
        let scale = |v: &Complex64| self.tol.abs + self.tol.rel * v.norm();
        let d0 = rms(y.iter().map(|v| v.norm() / scale(v)));
        let d1 = rms(f0.iter().zip(y).map(|(f, v)| f.norm() / scale(v)));
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h = h.min(t_end);
        match self.h_max {
            Some(m) => h.min(m),
            None => h,
        }
    }
}

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidInput(
            "time grid must be finite and nonnegative".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("time grid must be sorted".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_phase() {
        // y' = -i w y  =>  y = exp(-i w t)
        let w = 1.3;
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.4).collect();
        let out = DormandPrince::default()
            .integrate(
                |_, y, dy| dy[0] = Complex64::new(0.0, -w) * y[0],
                &[Complex64::new(1.0, 0.0)],
                &grid,
                |_| {},
            )
            .unwrap();
        for (t, y) in grid.iter().zip(&out) {
            let exact = Complex64::from_polar(1.0, -w * t);
            assert!((y[0] - exact).norm() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let y0 = [Complex64::new(0.3, -0.2), Complex64::new(1.0, 0.0)];
        let out = DormandPrince::default()
            .integrate(|_, y, dy| dy.copy_from_slice(y), &y0, &[0.0, 0.0], |_| {})
            .unwrap();
        assert_eq!(out[0], y0.to_vec());
        assert_eq!(out[1], y0.to_vec());
    }

    #[test]
    fn stiff_system_reports_step() {
        let solver = DormandPrince {
            max_steps: 1000,
            ..DormandPrince::default()
        };
        let res = solver.integrate(
            |_, y, dy| dy[0] = y[0] * -1e9,
            &[Complex64::new(1.0, 0.0)],
            &[10.0],
            |_| {},
        );
        assert!(matches!(res, Err(Error::Stiffness { .. })));
    }

    #[test]
    fn unsorted_grid_rejected() {
        let res = DormandPrince::default().integrate(
            |_, _, dy| dy[0] = Complex64::new(0.0, 0.0),
            &[Complex64::new(1.0, 0.0)],
            &[1.0, 0.5],
            |_| {},
        );
        assert!(matches!(res, Err(Error::InvalidInput(_))));
    }
}
