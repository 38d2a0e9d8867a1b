//! A single non-dissipative fluctuator: the exact four-frequency coherence and
//! its weak- and strong-coupling envelopes.

use log::warn;

use crate::error::{Error, Result};
use crate::model::{
    coherence_gr_raw, rabi_amplitude, thermal_population, CoherenceTrace, JcParams, Provenance,
    RegimeWarning, ThermalContext, TlfSpec,
};

/// Ratio used to decide whether one scale dominates another.
pub const REGIME_RATIO: f64 = 5.0;

/// `|Σ_α p_α e^{-iαλt} (cos(Ω_α t/2) + i δ_α/Ω_α sin(Ω_α t/2))|` with
/// `δ_α = δ + 2αλ`.
pub fn coherence_exact_single(params: &JcParams, tlf: &TlfSpec, ctx: ThermalContext, t: f64) -> Result<f64> {
    params.validate()?;
    tlf.validate()?;
    let (pp, pm) = thermal_population(tlf.epsilon, ctx)?;
    let delta = params.detuning();
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for (alpha, p, label) in [(1.0, pp, "alpha = +1"), (-1.0, pm, "alpha = -1")] {
        let amp = rabi_amplitude(params.g, delta + 2.0 * alpha * tlf.lambda, t).map_err(|_| {
            Error::DegenerateEigensystem {
                branch: Some(label.into()),
            }
        })?;
        acc += amp * num_complex::Complex64::from_polar(p, -alpha * tlf.lambda * t);
    }
    Ok(acc.norm().min(1.0))
}

/// `C_GR(Ω, t) · sqrt(cos²λt + tanh²(ε/2kT) sin²λt)`.
pub fn coherence_weak_envelope(params: &JcParams, tlf: &TlfSpec, ctx: ThermalContext, t: f64) -> Result<f64> {
    params.validate()?;
    tlf.validate()?;
    let th = ctx.polarization(tlf.epsilon)?;
    let gr = coherence_gr_raw(params.g, params.detuning(), t)?;
    Ok(gr * envelope(th, tlf.lambda * t))
}

/// `sqrt(cos²(g²t/2λ) + tanh² sin²(g²t/2λ))`.
pub fn coherence_strong_leading(params: &JcParams, tlf: &TlfSpec, ctx: ThermalContext, t: f64) -> Result<f64> {
    params.validate()?;
    tlf.validate()?;
    require_coupling(tlf.lambda)?;
    let th = ctx.polarization(tlf.epsilon)?;
    Ok(envelope(th, params.g * params.g * t / (2.0 * tlf.lambda)))
}

/// Leading envelope corrected by the `2λ` ripple:
/// `sqrt((A cos φ + B cos 2λt)² + tanh² (A sin φ + B sin 2λt)²)` with
/// `φ = g²t/2λ`, `B = g²/4λ²` and `A = 1 - B`.
pub fn coherence_strong_higher(params: &JcParams, tlf: &TlfSpec, ctx: ThermalContext, t: f64) -> Result<f64> {
    params.validate()?;
    tlf.validate()?;
    require_coupling(tlf.lambda)?;
    let th = ctx.polarization(tlf.epsilon)?;
    let (g, lambda) = (params.g, tlf.lambda);
    let b = g * g / (4.0 * lambda * lambda);
    let a = 1.0 - b;
    let (sp, cp) = (g * g * t / (2.0 * lambda)).sin_cos();
    let (sr, cr) = (2.0 * lambda * t).sin_cos();
    let re = a * cp + b * cr;
    let im = th * (a * sp + b * sr);
    Ok(re.hypot(im).min(1.0))
}

/// Envelope factor `sqrt(cos²λt + tanh² sin²λt)` of the weak-coupling form.
pub fn weak_tlf_envelope(tlf: &TlfSpec, ctx: ThermalContext, t: f64) -> Result<f64> {
    tlf.validate()?;
    Ok(envelope(ctx.polarization(tlf.epsilon)?, tlf.lambda * t))
}

fn envelope(polarization: f64, phase: f64) -> f64 {
    let (s, c) = phase.sin_cos();
    (c * c + polarization * polarization * s * s).sqrt().min(1.0)
}

fn require_coupling(lambda: f64) -> Result<()> {
    if lambda == 0.0 {
        Err(Error::RegimeViolation(
            "strong-coupling formulas need a nonzero TLF coupling".into(),
        ))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleMethod {
    Exact,
    WeakEnvelope,
    StrongLeading,
    StrongHigher,
}

impl SingleMethod {
    pub const ALL: [SingleMethod; 4] = [
        SingleMethod::Exact,
        SingleMethod::WeakEnvelope,
        SingleMethod::StrongLeading,
        SingleMethod::StrongHigher,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SingleMethod::Exact => "exact",
            SingleMethod::WeakEnvelope => "weak_envelope",
            SingleMethod::StrongLeading => "strong_leading",
            SingleMethod::StrongHigher => "strong_higher",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn eval(self, params: &JcParams, tlf: &TlfSpec, ctx: ThermalContext, t: f64) -> Result<f64> {
        match self {
            SingleMethod::Exact => coherence_exact_single(params, tlf, ctx, t),
            SingleMethod::WeakEnvelope => coherence_weak_envelope(params, tlf, ctx, t),
            SingleMethod::StrongLeading => coherence_strong_leading(params, tlf, ctx, t),
            SingleMethod::StrongHigher => coherence_strong_higher(params, tlf, ctx, t),
        }
    }

    /// Regime notes for this method; empty when the parameters are inside
    /// the intended regime.
    pub fn regime_warnings(self, params: &JcParams, tlf: &TlfSpec) -> Vec<RegimeWarning> {
        let mut out = Vec::new();
        let (g, lambda, delta) = (params.g, tlf.lambda.abs(), params.detuning());
        if !params.is_weakly_coupled() {
            out.push(RegimeWarning(format!(
                "g = {g} is not small compared with the bare frequencies"
            )));
        }
        match self {
            SingleMethod::Exact => {}
            SingleMethod::WeakEnvelope => {
                if g < REGIME_RATIO * lambda {
                    out.push(RegimeWarning(format!(
                        "weak-coupling envelope used with g/|lambda| = {:.3} < {REGIME_RATIO}",
                        g / lambda
                    )));
                }
                if lambda > 0.0 && delta.abs() * REGIME_RATIO > 4.0 * g * g / lambda {
                    out.push(RegimeWarning(format!(
                        "weak-coupling envelope needs |delta| << 4g^2/|lambda|; delta = {delta}"
                    )));
                }
            }
            SingleMethod::StrongLeading | SingleMethod::StrongHigher => {
                if lambda < REGIME_RATIO * g {
                    out.push(RegimeWarning(format!(
                        "strong-coupling envelope used with |lambda|/g = {:.3} < {REGIME_RATIO}",
                        lambda / g
                    )));
                }
                if delta != 0.0 {
                    out.push(RegimeWarning(format!(
                        "strong-coupling envelope assumes resonance but delta = {delta}; prefer the exact formula"
                    )));
                }
            }
        }
        out
    }

    /// Evaluates the method on a grid and logs any regime warnings once.
    pub fn trace(
        self,
        params: &JcParams,
        tlf: &TlfSpec,
        ctx: ThermalContext,
        grid: &[f64],
    ) -> Result<(CoherenceTrace, Vec<RegimeWarning>)> {
        crate::numerics::ode::check_grid(grid)?;
        let warnings = self.regime_warnings(params, tlf);
        for w in &warnings {
            warn!("{w}");
        }
        let prov = match self {
            SingleMethod::Exact => Provenance::Exact,
            m => Provenance::Approximation(m.tag().into()),
        };
        let trace = CoherenceTrace::from_fn(prov, grid, |t| self.eval(params, tlf, ctx, t))?;
        Ok((trace, warnings))
    }
}
