//! Microscopic tunnelling-model relations: phonon relaxation rate, the
//! dipolar coupling law and a Monte-Carlo average of the ensemble variance.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};

/// Samples per Monte-Carlo batch; each batch owns one RNG stream.
const BATCH: usize = 1 << 14;

/// Tunnelling two-level defect with asymmetry `delta` and tunnel splitting
/// `delta0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsMicro {
    pub delta: f64,
    pub delta0: f64,
}

impl TlsMicro {
    pub fn new(delta: f64, delta0: f64) -> Result<Self> {
        ensure(delta.is_finite(), || format!("asymmetry must be finite, got {delta}"))?;
        ensure(delta0.is_finite() && delta0 > 0.0, || {
            format!("tunnel splitting must be positive, got {delta0}")
        })?;
        Ok(Self { delta, delta0 })
    }

    /// `ε = sqrt(Δ² + Δ₀²)`.
    pub fn epsilon(&self) -> f64 {
        self.delta.hypot(self.delta0)
    }

    /// `u = (Δ₀/ε)²`.
    pub fn u(&self) -> f64 {
        let e = self.epsilon();
        if e == 0.0 {
            0.0
        } else {
            (self.delta0 / e).powi(2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub chi: f64,
    pub d: u32,
    pub j0: f64,
    pub r0: f64,
    pub cos_theta: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.d == 2 || self.d == 3, || format!("dimension must be 2 or 3, got {}", self.d))?;
        for (name, v) in [("chi", self.chi), ("J0", self.j0), ("r0", self.r0)] {
            ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))?;
        }
        ensure((0.0..=1.0).contains(&self.cos_theta), || {
            format!("cosTheta must lie in [0, 1], got {}", self.cos_theta)
        })
    }

    /// `∫dΩ_d`: 2π in two dimensions, 4π in three.
    pub fn solid_angle(&self) -> f64 {
        if self.d == 2 {
            2.0 * PI
        } else {
            4.0 * PI
        }
    }
}

/// `γ₁ = χ ε^{d−2} Δ₀² coth(ε/2kT)`.
pub fn relaxation_rate(tls: &TlsMicro, mat: &MaterialParams, kt: f64) -> Result<f64> {
    mat.validate()?;
    ensure(kt.is_finite() && kt > 0.0, || format!("kT must be positive, got {kt}"))?;
    ensure(tls.delta0.is_finite() && tls.delta0 >= 0.0, || "tunnel splitting must be nonnegative".into())?;
    let eps = tls.epsilon();
    ensure(eps > 0.0, || "TLS splitting must be positive".into())?;
    if tls.delta0 == 0.0 {
        return Ok(0.0);
    }
    let coth = 1.0 / (eps / (2.0 * kt)).tanh();
    Ok(mat.chi * eps.powi(mat.d as i32 - 2) * tls.delta0 * tls.delta0 * coth)
}

/// `|λ| = J₀ (r₀/r)^d cosθ sqrt(1 − u)` with the sign of `sign`.
pub fn coupling_from_geometry(mat: &MaterialParams, r: f64, u: f64, sign: f64) -> Result<f64> {
    mat.validate()?;
    ensure(r.is_finite(), || format!("separation must be finite, got {r}"))?;
    if r < mat.r0 {
        return Err(Error::CutoffViolation { r, r0: mat.r0 });
    }
    ensure(u > 0.0 && u <= 1.0, || format!("u must lie in (0, 1], got {u}"))?;
    ensure(sign == 1.0 || sign == -1.0, || format!("sign must be +1 or -1, got {sign}"))?;
    let mag = mat.j0 * (mat.r0 / r).powi(mat.d as i32) * mat.cos_theta * (1.0 - u).sqrt();
    Ok(sign * mag)
}

/// Integration domain and defect density for the variance average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDomain {
    /// Density `P₀` of the `P₀/Δ₀` distribution.
    pub p0: f64,
    pub u_min: f64,
    pub eps_max: f64,
    pub r_max: f64,
}

impl VarianceDomain {
    fn validate(&self, mat: &MaterialParams) -> Result<()> {
        ensure(self.p0.is_finite() && self.p0 > 0.0, || format!("P0 must be positive, got {}", self.p0))?;
        ensure(self.u_min > 0.0 && self.u_min < 1.0, || format!("uMin must lie in (0, 1), got {}", self.u_min))?;
        ensure(self.eps_max.is_finite() && self.eps_max > 0.0, || {
            format!("epsMax must be positive, got {}", self.eps_max)
        })?;
        ensure(self.r_max.is_finite() && self.r_max > mat.r0, || {
            format!("rMax must exceed r0 = {}, got {}", mat.r0, self.r_max)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Analytic contribution of `r > rMax`, not included in `mean`.
    pub radial_remainder: f64,
}

/// Monte-Carlo estimate of
/// `∫dΩ ∫r^{d−1}dr ∫dε ∫du P₀/(2u√(1−u)) λ²(r, u) sech²(ε/2kT)`.
///
/// `r` is drawn from `r^{−d−1}`, `u` log-uniformly and `ε` uniformly, so the
/// radial factor is integrated exactly and only the `u` and `ε` factors carry
/// sampling noise. Batches use independent streams of the seeded generator.
pub fn average_variance_mc(
    mat: &MaterialParams,
    domain: &VarianceDomain,
    kt: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if mat.d <= 1 {
        return Err(Error::Divergence(format!(
            "radial integral of r^(d-1) r^(-2d) diverges at large r for d = {}",
            mat.d
        )));
    }
    mat.validate()?;
    domain.validate(mat)?;
    ensure(kt.is_finite() && kt > 0.0, || format!("kT must be positive, got {kt}"))?;
    ensure(n_samples >= 10_000, || format!("at least 10^4 samples are required, got {n_samples}"))?;

    let d = mat.d as i32;
    let ratio = (mat.r0 / domain.r_max).powi(d);
    // normalisation of the r^{−d−1} proposal on [r0, rMax]
    let z_r = (mat.r0.powi(-d) - domain.r_max.powi(-d)) / mat.d as f64;
    let log_range = (1.0 / domain.u_min).ln();
    let (min_r, max_r) = (mat.r0, domain.r_max);

    let batches = n_samples.div_ceil(BATCH);
    let partials: Vec<(f64, f64, usize)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(n_samples - b * BATCH);
            let (mut mean, mut m2) = (0.0, 0.0);
            for k in 0..count {
                let r = sample_power_law(&mut rng, min_r, max_r, d);
                let u = domain.u_min * (rng.random::<f64>() * log_range).exp();
                let eps = rng.random::<f64>() * domain.eps_max;
                let lambda = mat.j0 * (mat.r0 / r).powi(d) * mat.cos_theta * (1.0 - u).sqrt();
                let sech = 1.0 / (eps / (2.0 * kt)).cosh();
                let integrand = r.powi(d - 1) * domain.p0 / (2.0 * u * (1.0 - u).sqrt()) * lambda * lambda * sech * sech;
                let density = r.powi(-d - 1) / z_r / (u * log_range) / domain.eps_max;
                let w = integrand / density;
                let delta = w - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (w - mean);
            }
            (mean, m2, count)
        })
        .collect();

    // ordered Chan–Welford merge
    let (mut mean, mut m2, mut n) = (0.0, 0.0, 0usize);
    for (bm, bm2, bn) in partials {
        let total = n + bn;
        let delta = bm - mean;
        mean += delta * bn as f64 / total as f64;
        m2 += bm2 + delta * delta * (n as f64) * (bn as f64) / total as f64;
        n = total;
    }
    let var = m2 / (n - 1) as f64;
    let omega = mat.solid_angle();
    let est = omega * mean;
    Ok(McEstimate {
        mean: est,
        std_error: omega * (var / n as f64).sqrt(),
        samples: n,
        radial_remainder: est * ratio / (1.0 - ratio),
    })
}

/// Inverse-CDF draw from `r^{−d−1}` on `[lo, hi]`.
fn sample_power_law<R: Rng>(rng: &mut R, lo: f64, hi: f64, d: i32) -> f64 {
    let a = lo.powi(-d);
    let b = hi.powi(-d);
    let x: f64 = rng.random();
    (a - x * (a - b)).powf(-1.0 / d as f64)
}
