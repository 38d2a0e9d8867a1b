//! Physical parameter types, thermal populations and the closed-form
//! Jaynes–Cummings (JC) coherence shared by every other module.
//!
//! Frequencies are angular and measured in units of a base frequency, by
//! default the oscillator frequency (`omega0 = 1`). Energies use `hbar = 1`.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};

/// Arguments of `tanh` beyond this are treated as saturated.
const TANH_SATURATION: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    pub omega0: f64,
    pub epsilon_t: f64,
    pub g: f64,
}

impl JcParams {
    pub fn new(omega0: f64, epsilon_t: f64, g: f64) -> Result<Self> {
        let p = Self {
            omega0,
            epsilon_t,
            g,
        };
        p.validate()?;
        Ok(p)
    }

    /// Resonant system (`epsilon_t = omega0 = 1`).
    pub fn resonant(g: f64) -> Self {
        Self {
            omega0: 1.0,
            epsilon_t: 1.0,
            g,
        }
    }

    /// `omega0 = 1` and `epsilon_t = 1 + delta`.
    pub fn with_detuning(g: f64, delta: f64) -> Self {
        Self {
            omega0: 1.0,
            epsilon_t: 1.0 + delta,
            g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.omega0.is_finite() && self.omega0 > 0.0, || {
            format!("omega0 must be positive, got {}", self.omega0)
        })?;
        ensure(self.epsilon_t.is_finite() && self.epsilon_t > 0.0, || {
            format!("epsilonT must be positive, got {}", self.epsilon_t)
        })?;
        ensure(self.g.is_finite() && self.g >= 0.0, || {
            format!("g must be nonnegative, got {}", self.g)
        })
    }

    /// `delta = epsilon_t - omega0`.
    pub fn detuning(&self) -> f64 {
        self.epsilon_t - self.omega0
    }

    /// Generalized Rabi frequency `sqrt(4 g^2 + delta^2)`.
    pub fn rabi_frequency(&self) -> f64 {
        rabi_frequency(self.g, self.detuning())
    }

    /// JC treatment assumes `g << min(epsilon_t, omega0)`. Violation is only
    /// reported, never rejected.
    pub fn is_weakly_coupled(&self) -> bool {
        self.g < self.epsilon_t.min(self.omega0)
    }
}

#[inline]
pub fn rabi_frequency(g: f64, delta: f64) -> f64 {
    (4.0 * g * g + delta * delta).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalContext {
    /// `kT / epsilon -> infinity`: every fluctuator has equal populations.
    ScaleSeparated,
    FiniteTemperature { kt: f64 },
}

impl ThermalContext {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThermalContext::ScaleSeparated => Ok(()),
            ThermalContext::FiniteTemperature { kt } => ensure(kt.is_finite() && kt > 0.0, || {
                format!("kT must be positive, got {kt}")
            }),
        }
    }

    /// `tanh(epsilon / 2kT)`; zero in the scale-separated regime.
    pub fn polarization(&self, epsilon: f64) -> Result<f64> {
        ensure(epsilon.is_finite(), || format!("non-finite splitting {epsilon}"))?;
        ensure(epsilon >= 0.0, || format!("splitting must be nonnegative, got {epsilon}"))?;
        self.validate()?;
        Ok(match *self {
            ThermalContext::ScaleSeparated => 0.0,
            ThermalContext::FiniteTemperature { kt } => {
                let x = epsilon / (2.0 * kt);
                if x > TANH_SATURATION {
                    1.0
                } else {
                    x.tanh()
                }
            }
        })
    }

    /// `sech^2(epsilon / 2kT) = 1 - tanh^2`.
    pub fn sech2(&self, epsilon: f64) -> Result<f64> {
        let t = self.polarization(epsilon)?;
        Ok(1.0 - t * t)
    }
}

/// Populations `(p+, p-)` of the upper and lower fluctuator states.
pub fn thermal_population(epsilon: f64, ctx: ThermalContext) -> Result<(f64, f64)> {
    let t = ctx.polarization(epsilon)?;
    Ok((0.5 * (1.0 - t), 0.5 * (1.0 + t)))
}

/// First excited JC doublet `|1±>` and the ground state frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcEigensystem {
    pub rabi: f64,
    pub cos_theta_plus: f64,
    pub sin_theta_plus: f64,
    pub cos_theta_minus: f64,
    pub sin_theta_minus: f64,
    pub omega1_plus: f64,
    pub omega1_minus: f64,
    pub omega_ground: f64,
}

impl JcEigensystem {
    /// Transition frequency `omega_{1±} - omega_G`.
    pub fn transition_frequency(&self, plus: bool) -> f64 {
        let w = if plus {
            self.omega1_plus
        } else {
            self.omega1_minus
        };
        w - self.omega_ground
    }
}

pub fn jc_eigensystem(params: &JcParams) -> Result<JcEigensystem> {
    params.validate()?;
    let delta = params.detuning();
    let rabi = params.rabi_frequency();
    let (cp, sp, cm, sm) = mixing(params.g, delta).ok_or(Error::DegenerateEigensystem { branch: None })?;
    Ok(JcEigensystem {
        rabi,
        cos_theta_plus: cp,
        sin_theta_plus: sp,
        cos_theta_minus: cm,
        sin_theta_minus: sm,
        omega1_plus: 0.5 * (params.omega0 + rabi),
        omega1_minus: 0.5 * (params.omega0 - rabi),
        omega_ground: -0.5 * params.epsilon_t,
    })
}

/// `(cos θ+, sin θ+, cos θ-, sin θ-)`, or `None` when `Ω = 0`.
fn mixing(g: f64, delta: f64) -> Option<(f64, f64, f64, f64)> {
    let rabi = rabi_frequency(g, delta);
    if rabi == 0.0 {
        return None;
    }
    let lo = ((rabi - delta) / (2.0 * rabi)).max(0.0).sqrt();
    let hi = ((rabi + delta) / (2.0 * rabi)).max(0.0).sqrt();
    Some((lo, hi, hi, lo))
}

/// `cos(Ωt/2) + i (δ/Ω) sin(Ωt/2)`: the normalized `<a(t)>` of the JC doublet
/// with the common phase removed.
#[inline]
pub fn rabi_amplitude(g: f64, delta: f64, t: f64) -> Result<Complex64> {
    let rabi = rabi_frequency(g, delta);
    if rabi == 0.0 {
        return Err(Error::DegenerateEigensystem { branch: None });
    }
    let (s, c) = (0.5 * rabi * t).sin_cos();
    Ok(Complex64::new(c, delta / rabi * s))
}

/// Generalized Rabi coherence `sqrt(cos^2(Ωt/2) + (δ/Ω)^2 sin^2(Ωt/2))`.
pub fn coherence_gr(params: &JcParams, t: f64) -> Result<f64> {
    ensure(t >= 0.0, || format!("time must be nonnegative, got {t}"))?;
    params.validate()?;
    coherence_gr_raw(params.g, params.detuning(), t)
}

pub(crate) fn coherence_gr_raw(g: f64, delta: f64, t: f64) -> Result<f64> {
    Ok(rabi_amplitude(g, delta, t)?.norm().min(1.0))
}

/// Short-time quadratic law `1 - g^2 t^2 / 2`, valid while `Ωt/2 << 1`.
pub fn coherence_gr_short_time(g: f64, t: f64) -> f64 {
    1.0 - 0.5 * g * g * t * t
}

/// One two-level fluctuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlfSpec {
    pub epsilon: f64,
    /// TLS–TLF coupling; the sign encodes the dipole orientation.
    pub lambda: f64,
    pub gamma: Option<f64>,
}

impl TlfSpec {
    pub fn new(epsilon: f64, lambda: f64) -> Self {
        Self {
            epsilon,
            lambda,
            gamma: None,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.epsilon.is_finite() && self.epsilon >= 0.0, || {
            format!("TLF splitting must be nonnegative, got {}", self.epsilon)
        })?;
        ensure(self.lambda.is_finite(), || {
            format!("TLF coupling must be finite, got {}", self.lambda)
        })?;
        if let Some(gamma) = self.gamma {
            ensure(gamma.is_finite() && gamma >= 0.0, || {
                format!("TLF rate must be nonnegative, got {gamma}")
            })?;
        }
        Ok(())
    }
}

/// Uniform time grid `t_k = k tMax / (nPoints - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_points: usize) -> Result<Self> {
        ensure(t_max.is_finite() && t_max > 0.0, || {
            format!("tMax must be positive, got {t_max}")
        })?;
        ensure(n_points >= 2, || format!("nPoints must be at least 2, got {n_points}"))?;
        Ok(Self { t_max, n_points })
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(0.0, self.t_max, self.n_points)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { b } else { a + step * k as f64 })
                .collect()
        }
    }
}

/// Where a coherence trace came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Oracle,
    Approximation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceTrace {
    pub provenance: Provenance,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl CoherenceTrace {
    pub fn new(provenance: Provenance, times: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(times.len(), values.len());
        Self {
            provenance,
            times,
            values,
        }
    }

    /// Evaluates `f` at every grid time.
    pub fn from_fn<F>(provenance: Provenance, times: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(provenance, times.to_vec(), values))
    }

    pub fn sup_distance(&self, other: &CoherenceTrace) -> f64 {
        sup_distance(&self.values, &other.values)
    }
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "traces must share a grid");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Non-fatal note that an approximation is used outside its intended regime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeWarning(pub String);

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}
