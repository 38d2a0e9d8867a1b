//! Ensembles of frozen, non-dissipative fluctuators: the exact sum over all
//! `2^N` configurations, Gaussian continuum limits and coupling samplers.

use std::f64::consts::{PI, SQRT_2};

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{ensure, Error, Result};
use crate::model::{
    coherence_gr_raw, rabi_frequency, thermal_population, CoherenceTrace, JcParams, Provenance,
    RegimeWarning, ThermalContext, TlfSpec,
};
use crate::numerics::quad::{self, QuadOptions};
use crate::numerics::CompensatedSum;

pub const DEFAULT_EXACT_CAP: usize = 20;

/// Configurations per work item of the exact sum. Fixed so the reduction
/// order does not depend on the thread count.
const CHUNK: usize = 1 << 12;

/// Gaussian truncation in units of σ.
const TRUNCATION: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TlfEnsemble {
    pub tlfs: Vec<TlfSpec>,
    pub ctx: ThermalContext,
    pub exact_cap: usize,
}

impl TlfEnsemble {
    pub fn new(tlfs: Vec<TlfSpec>, ctx: ThermalContext) -> Self {
        Self {
            tlfs,
            ctx,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.exact_cap = cap;
        self
    }

    pub fn len(&self) -> usize {
        self.tlfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tlfs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.ctx.validate()?;
        self.tlfs.iter().try_for_each(TlfSpec::validate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mu: f64,
    pub sigma2: f64,
    /// `max σ_j² / σ²`; `None` when `σ² = 0` or the stats were given directly.
    pub r: Option<f64>,
}

impl EnsembleStats {
    pub fn from_moments(mu: f64, sigma: f64) -> Result<Self> {
        ensure(mu.is_finite(), || format!("mu must be finite, got {mu}"))?;
        ensure(sigma.is_finite() && sigma >= 0.0, || format!("sigma must be nonnegative, got {sigma}"))?;
        Ok(Self {
            mu,
            sigma2: sigma * sigma,
            r: None,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }
}

/// `μ = Σ λ_j tanh(ε_j/2kT)`, `σ² = Σ λ_j² sech²(ε_j/2kT)`.
pub fn ensemble_stats(ens: &TlfEnsemble) -> Result<EnsembleStats> {
    ens.validate()?;
    ensure(!ens.is_empty(), || "ensemble statistics need at least one fluctuator".into())?;
    let mut mu = 0.0;
    let mut sigma2 = 0.0;
    let mut largest = 0.0f64;
    for tlf in &ens.tlfs {
        let th = ens.ctx.polarization(tlf.epsilon)?;
        mu += tlf.lambda * th;
        let s = tlf.lambda * tlf.lambda * (1.0 - th * th);
        sigma2 += s;
        largest = largest.max(s);
    }
    let r = (sigma2 > 0.0).then(|| largest / sigma2);
    Ok(EnsembleStats { mu, sigma2, r })
}

/// `e^{-iΛt}(cos(Ωt/2) + iδ/Ω sin(Ωt/2))` written as two phasors.
#[inline]
fn config_amplitude(lambda_sum: f64, delta: f64, rabi: f64, t: f64) -> Complex64 {
    let ratio = delta / rabi;
    let lo = Complex64::from_polar(0.5 * (1.0 + ratio), -(lambda_sum - 0.5 * rabi) * t);
    let hi = Complex64::from_polar(0.5 * (1.0 - ratio), -(lambda_sum + 0.5 * rabi) * t);
    lo + hi
}

/// Exact configuration sum on a grid.
pub fn exact_ensemble_trace(params: &JcParams, ens: &TlfEnsemble, grid: &[f64]) -> Result<CoherenceTrace> {
    params.validate()?;
    ens.validate()?;
    crate::numerics::ode::check_grid(grid)?;
    let n = ens.len();
    if n > ens.exact_cap {
        return Err(Error::EnsembleCapacity { n, cap: ens.exact_cap });
    }
    let pops = ens
        .tlfs
        .iter()
        .map(|t| thermal_population(t.epsilon, ens.ctx))
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<f64> = ens.tlfs.iter().map(|t| t.lambda).collect();
    let (g, delta) = (params.g, params.detuning());
    let configs = 1usize << n;
    let chunks = configs.div_ceil(CHUNK);

    let partials = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<CompensatedSum>> {
            let mut acc = vec![CompensatedSum::new(); grid.len()];
            for cfg in c * CHUNK..((c + 1) * CHUNK).min(configs) {
                // bit j set means fluctuator j sits in |->
                let mut lam = 0.0;
                let mut p = 1.0;
                for j in 0..n {
                    if (cfg >> j) & 1 == 0 {
                        lam += lambdas[j];
                        p *= pops[j].0;
                    } else {
                        lam -= lambdas[j];
                        p *= pops[j].1;
                    }
                }
                if p == 0.0 {
                    continue;
                }
                let d = delta + 2.0 * lam;
                let rabi = rabi_frequency(g, d);
                if rabi == 0.0 {
                    return Err(Error::DegenerateEigensystem {
                        branch: Some(format!("configuration {cfg:#b}")),
                    });
                }
                for (a, &t) in acc.iter_mut().zip(grid) {
                    a.add(config_amplitude(lam, d, rabi, t) * p);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = vec![CompensatedSum::new(); grid.len()];
    for part in &partials {
        for (tot, p) in total.iter_mut().zip(part) {
            tot.merge(p);
        }
    }
    let values = total.iter().map(|s| s.value().norm().min(1.0)).collect();
    Ok(CoherenceTrace::new(Provenance::Exact, grid.to_vec(), values))
}

pub fn coherence_exact_ensemble(params: &JcParams, ens: &TlfEnsemble, t: f64) -> Result<f64> {
    Ok(exact_ensemble_trace(params, ens, &[t])?.values[0])
}

fn gaussian(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

fn require_spread(stats: &EnsembleStats) -> Result<()> {
    ensure(stats.sigma2.is_finite() && stats.sigma2 > 0.0, || {
        format!("continuum limit needs sigma^2 > 0, got {}", stats.sigma2)
    })?;
    ensure(stats.mu.is_finite(), || "mu must be finite".into())
}

/// `|∫ dΛ N(μ, σ²) f(Λ, t)|` with the full JC amplitude `f`.
pub fn coherence_continuum(params: &JcParams, stats: &EnsembleStats, t: f64) -> Result<f64> {
    params.validate()?;
    require_spread(stats)?;
    ensure(t.is_finite() && t >= 0.0, || format!("time must be nonnegative, got {t}"))?;
    let (mu, sigma) = (stats.mu, stats.sigma());
    let (g, delta) = (params.g, params.detuning());
    let mut degenerate = false;
    let f = |lam: f64| {
        let d = delta + 2.0 * lam;
        let rabi = rabi_frequency(g, d);
        if rabi == 0.0 {
            degenerate = true;
            return Complex64::new(0.0, 0.0);
        }
        config_amplitude(lam, d, rabi, t) * gaussian(lam, mu, sigma)
    };
    let opts = QuadOptions {
        rel_tol: 1e-8,
        abs_tol: 1e-12,
        max_intervals: 20_000,
    };
    let res = quad::integrate(f, mu - TRUNCATION * sigma, mu + TRUNCATION * sigma, opts).map_err(|e| match e {
        Error::Quadrature(msg) => Error::Quadrature(format!(
            "{msg}; integrand spans about {:.0} oscillations (sigma t = {:.3e})",
            TRUNCATION * sigma * t / PI,
            sigma * t
        )),
        other => other,
    })?;
    if degenerate {
        return Err(Error::DegenerateEigensystem {
            branch: Some("continuum integrand".into()),
        });
    }
    Ok(res.value.norm().min(1.0))
}

/// `C_GR(Ω(μ), t) exp(-σ²t²/2)`, with the detuning shifted by `2μ`.
pub fn coherence_narrow(params: &JcParams, stats: &EnsembleStats, t: f64) -> Result<f64> {
    params.validate()?;
    ensure(stats.sigma2 >= 0.0, || "sigma^2 must be nonnegative".into())?;
    let gr = coherence_gr_raw(params.g, params.detuning() + 2.0 * stats.mu, t)?;
    Ok(gr * (-0.5 * stats.sigma2 * t * t).exp())
}

/// Excision half-width around the essential singularity at `Λ = 0`.
pub fn broad_cutoff(g: f64, t: f64) -> f64 {
    g * g * t / 2000.0
}

/// `|∫ dΛ N(μ, σ²) e^{i g²t/2Λ}|`.
///
/// Away from the origin the integral is done in `Λ`. Closer in, the
/// substitution `u = 1/Λ` turns the phase into `e^{i a u}` with `a = g²t/2`,
/// integrated period by period; inside the excision window `|Λ| < Λ_cut` a
/// few more periods are summed and the rest comes from a two-term
/// integration-by-parts expansion.
pub fn coherence_broad_integral(g: f64, stats: &EnsembleStats, t: f64) -> Result<f64> {
    ensure(g.is_finite() && g >= 0.0, || format!("g must be nonnegative, got {g}"))?;
    require_spread(stats)?;
    ensure(t.is_finite() && t >= 0.0, || format!("time must be nonnegative, got {t}"))?;
    let a = 0.5 * g * g * t;
    if a == 0.0 {
        return Ok(1.0);
    }
    let (mu, sigma) = (stats.mu, stats.sigma());
    let lo = mu - TRUNCATION * sigma;
    let hi = mu + TRUNCATION * sigma;
    let cut = broad_cutoff(g, t);
    let opts = QuadOptions {
        rel_tol: 1e-8,
        abs_tol: 1e-13,
        max_intervals: 20_000,
    };
    let with_cut = |e: Error| match e {
        Error::Quadrature(msg) => Error::Quadrature(format!("{msg} (Lambda_cut = {cut:e})")),
        other => other,
    };
    let direct = |x0: f64, x1: f64| -> Result<Complex64> {
        if x1 <= x0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        quad::integrate(
            |lam| Complex64::from_polar(gaussian(lam, mu, sigma), a / lam),
            x0,
            x1,
            opts,
        )
        .map(|r| r.value)
        .map_err(with_cut)
    };

    if lo >= 0.0 || hi <= 0.0 {
        return Ok(direct(lo, hi)?.norm().min(1.0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for sign in [1.0, -1.0] {
        let reach = if sign > 0.0 { hi } else { -lo };
        total += broad_side(a, sign, reach, cut, mu, sigma, &direct).map_err(with_cut)?;
    }
    Ok(total.norm().min(1.0))
}

/// `∫_0^reach dx N(s x) e^{i s a/x}` for one sign `s` of `Λ = s x`.
fn broad_side<D>(a: f64, sign: f64, reach: f64, cut: f64, mu: f64, sigma: f64, direct: &D) -> Result<Complex64>
where
    D: Fn(f64, f64) -> Result<Complex64>,
{
    let b = sign * a;
    let density = |x: f64| gaussian(sign * x, mu, sigma);
    // transformed amplitude h(u) = N(s/u)/u² and its derivative
    let h = |u: f64| density(1.0 / u) / (u * u);
    let dh = |u: f64| {
        let x = 1.0 / u;
        let lam = sign * x;
        // d/du N(s/u) = N'(Λ) · (−s/u²), N'(Λ) = −(Λ − μ)/σ² N
        density(x) * (sign * (lam - mu) / (sigma * sigma) / u.powi(4) - 2.0 / u.powi(3))
    };

    let inner = (0.25 * sigma).clamp(cut.min(reach), reach);
    let mut total = if inner < reach {
        if sign > 0.0 {
            direct(inner, reach)?
        } else {
            direct(-reach, -inner)?
        }
    } else {
        Complex64::new(0.0, 0.0)
    };

    let period = 2.0 * PI / a;
    let panel = |u0: f64, u1: f64| -> Result<Complex64> {
        let opts = QuadOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-16,
            max_intervals: 200,
        };
        quad::integrate(|u| Complex64::from_polar(h(u), b * u), u0, u1, opts).map(|r| r.value)
    };
    let u_start = 1.0 / inner;
    let u_cut = 1.0 / cut.min(inner);
    let mut u = u_start;
    let mut acc = CompensatedSum::new();
    while u < u_cut {
        let next = (u + period).min(u_cut);
        acc.add(panel(u, next)?);
        u = next;
    }
    // a few periods inside the excision window before the expansion
    for _ in 0..8 {
        acc.add(panel(u, u + period)?);
        u += period;
    }
    // ∫_X^∞ h e^{ibu} du ≈ −h(X)e^{ibX}/(ib) + h'(X)e^{ibX}/(ib)²
    let ib = Complex64::new(0.0, b);
    let phase = Complex64::from_polar(1.0, b * u);
    acc.add(phase * (-h(u) / ib + dh(u) / (ib * ib)));
    total += acc.value();
    Ok(total)
}

/// `½[erfc(g²t/2σ + μ/√2σ) + erfc(g²t/2σ − μ/√2σ)]`.
pub fn coherence_broad_erfc(g: f64, stats: &EnsembleStats, t: f64) -> Result<f64> {
    require_spread(stats)?;
    let sigma = stats.sigma();
    let x = g * g * t / (2.0 * sigma);
    let m = stats.mu / (SQRT_2 * sigma);
    Ok(0.5 * (erfc(x + m) + erfc(x - m)))
}

/// `1 − g² e^{−μ²/2σ²} t / (√π σ)`, floored at zero.
pub fn coherence_broad_linear(g: f64, stats: &EnsembleStats, t: f64) -> Result<f64> {
    require_spread(stats)?;
    let sigma = stats.sigma();
    let slope = g * g * (-stats.mu * stats.mu / (2.0 * stats.sigma2)).exp() / (PI.sqrt() * sigma);
    Ok((1.0 - slope * t).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMethod {
    Exact,
    Continuum,
    Narrow,
    BroadIntegral,
    BroadErfc,
    BroadLinear,
}

impl EnsembleMethod {
    pub const ALL: [EnsembleMethod; 6] = [
        EnsembleMethod::Exact,
        EnsembleMethod::Continuum,
        EnsembleMethod::Narrow,
        EnsembleMethod::BroadIntegral,
        EnsembleMethod::BroadErfc,
        EnsembleMethod::BroadLinear,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EnsembleMethod::Exact => "exact",
            EnsembleMethod::Continuum => "continuum",
            EnsembleMethod::Narrow => "narrow",
            EnsembleMethod::BroadIntegral => "broad_integral",
            EnsembleMethod::BroadErfc => "broad_erfc",
            EnsembleMethod::BroadLinear => "broad_linear",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    /// Evaluates a statistics-based method at one time.
    pub fn eval_stats(self, params: &JcParams, stats: &EnsembleStats, t: f64) -> Result<f64> {
        match self {
            EnsembleMethod::Exact => Err(Error::InvalidInput(
                "the exact sum needs the fluctuator list, not just its statistics".into(),
            )),
            EnsembleMethod::Continuum => coherence_continuum(params, stats, t),
            EnsembleMethod::Narrow => coherence_narrow(params, stats, t),
            EnsembleMethod::BroadIntegral => coherence_broad_integral(params.g, stats, t),
            EnsembleMethod::BroadErfc => coherence_broad_erfc(params.g, stats, t),
            EnsembleMethod::BroadLinear => coherence_broad_linear(params.g, stats, t),
        }
    }

    pub fn regime_warnings(self, params: &JcParams, stats: &EnsembleStats, t_max: f64) -> Vec<RegimeWarning> {
        let (g, sigma, mu) = (params.g, stats.sigma(), stats.mu);
        let mut out = Vec::new();
        match self {
            EnsembleMethod::Exact | EnsembleMethod::Continuum => {}
            EnsembleMethod::Narrow => {
                if g < 5.0 * sigma {
                    out.push(RegimeWarning(format!("narrow-ensemble law used with g/sigma = {:.3}", g / sigma)));
                }
                if sigma > 0.0 && t_max > g / stats.sigma2 {
                    out.push(RegimeWarning(format!(
                        "narrow-ensemble law used beyond t = g/sigma^2 = {:.4e}",
                        g / stats.sigma2
                    )));
                }
            }
            EnsembleMethod::BroadIntegral | EnsembleMethod::BroadErfc | EnsembleMethod::BroadLinear => {
                if sigma < 5.0 * g {
                    out.push(RegimeWarning(format!("broad-ensemble law used with sigma/g = {:.3}", sigma / g)));
                }
                if params.detuning() != 0.0 {
                    out.push(RegimeWarning(format!(
                        "broad-ensemble law assumes resonance but delta = {}",
                        params.detuning()
                    )));
                }
                if self != EnsembleMethod::BroadIntegral && g > 0.0 && t_max > sigma / (g * g) {
                    out.push(RegimeWarning(format!(
                        "short-time broad law used beyond t = sigma/g^2 = {:.4e}",
                        sigma / (g * g)
                    )));
                }
                if self == EnsembleMethod::BroadErfc && mu.abs() > sigma {
                    out.push(RegimeWarning(format!("erfc law used with |mu|/sigma = {:.3} > 1", mu.abs() / sigma)));
                }
            }
        }
        out
    }

    /// Statistics-based trace on a grid, evaluated in parallel over time.
    pub fn stats_trace(
        self,
        params: &JcParams,
        stats: &EnsembleStats,
        grid: &[f64],
    ) -> Result<(CoherenceTrace, Vec<RegimeWarning>)> {
        crate::numerics::ode::check_grid(grid)?;
        let warnings = self.regime_warnings(params, stats, grid.last().copied().unwrap_or(0.0));
        for w in &warnings {
            warn!("{w}");
        }
        let values = grid
            .par_iter()
            .map(|&t| self.eval_stats(params, stats, t))
            .collect::<Result<Vec<_>>>()?;
        let prov = Provenance::Approximation(self.tag().into());
        Ok((CoherenceTrace::new(prov, grid.to_vec(), values), warnings))
    }
}

/// Splitting distribution for sampled fluctuators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for EpsilonRange {
    fn default() -> Self {
        Self { lo: 0.01, hi: 0.2 }
    }
}

impl EpsilonRange {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..self.hi)
        } else {
            self.lo
        }
    }

    fn validate(&self) -> Result<()> {
        ensure(self.lo.is_finite() && self.hi.is_finite() && 0.0 <= self.lo && self.lo <= self.hi, || {
            format!("invalid splitting range [{}, {}]", self.lo, self.hi)
        })
    }
}

/// `λ_j` i.i.d. uniform on `[−half_width, half_width]`.
pub fn sample_uniform_couplings<R: Rng + ?Sized>(
    n: usize,
    half_width: f64,
    eps: EpsilonRange,
    rng: &mut R,
) -> Result<Vec<TlfSpec>> {
    ensure(n >= 1, || "at least one fluctuator is required".into())?;
    ensure(half_width.is_finite() && half_width > 0.0, || {
        format!("half width must be positive, got {half_width}")
    })?;
    eps.validate()?;
    Ok((0..n)
        .map(|_| {
            let lambda = rng.random_range(-half_width..=half_width);
            TlfSpec::new(eps.sample(rng), lambda)
        })
        .collect())
}

/// Coupling magnitude `g w / r^dim` of a fluctuator at `position`.
pub fn spatial_coupling(position: &[f64], g: f64, w: f64) -> f64 {
    let r2: f64 = position.iter().map(|x| x * x).sum();
    g * w / r2.sqrt().powi(position.len() as i32)
}

/// Positions uniform in `[lo, hi]^dim`, `λ_j = ± g w / r_j^dim` with a fair
/// random sign.
#[allow(clippy::too_many_arguments)]
pub fn sample_spatial_couplings<R: Rng + ?Sized>(
    n: usize,
    dim: usize,
    bounds: (f64, f64),
    w: f64,
    g: f64,
    eps: EpsilonRange,
    rng: &mut R,
) -> Result<Vec<TlfSpec>> {
    ensure(n >= 1, || "at least one fluctuator is required".into())?;
    ensure(dim == 2 || dim == 3, || format!("dimension must be 2 or 3, got {dim}"))?;
    let (lo, hi) = bounds;
    ensure(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo, || {
        format!("coordinate box [{lo}, {hi}] must be positive and exclude the origin")
    })?;
    ensure(w.is_finite() && w > 0.0, || format!("scale w must be positive, got {w}"))?;
    ensure(g.is_finite() && g > 0.0, || format!("g must be positive, got {g}"))?;
    eps.validate()?;
    let mut pos = vec![0.0; dim];
    Ok((0..n)
        .map(|_| {
            for x in pos.iter_mut() {
                *x = rng.random_range(lo..=hi);
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            TlfSpec::new(eps.sample(rng), sign * spatial_coupling(&pos, g, w))
        })
        .collect())
}
