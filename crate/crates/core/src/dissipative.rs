//! One fluctuator that flips at equal up and down rates `gamma`, on resonance.
//!
//! The four reduced amplitudes close exactly for the `(|0> + |1>)/√2` initial
//! state. In the frame rotating at `omega0`, with `O± = <|G><1±|>` and
//! `T± = <τz |G><1±|>`:
//!
//! ```text
//! dO±/dt = ∓ig O± − iλ (T± − T∓)
//! dT±/dt = −(±ig + 2γ) T± − iλ (O± − O∓)
//! ```
//!
//! and `X± = O+ ± O−`, `Y± = T+ ± T−` obey the sum/difference equations used
//! below. The coherence is `√2 |X+|`.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::model::{CoherenceTrace, JcParams, Provenance, RegimeWarning, TlfSpec};
use crate::oracle::oracle_lindblad_coherence;
use crate::numerics::{DormandPrince, Tolerances};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub o_plus: Complex64,
    pub o_minus: Complex64,
    pub tz_o_plus: Complex64,
    pub tz_o_minus: Complex64,
}

impl ReducedState {
    /// `X+(0) = 1/√2`, all other combinations zero.
    pub fn initial() -> Self {
        let o = Complex64::new(0.5 * std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            o_plus: o,
            o_minus: o,
            tz_o_plus: Complex64::new(0.0, 0.0),
            tz_o_minus: Complex64::new(0.0, 0.0),
        }
    }

    /// `[X+, X−, Y+, Y−]`.
    pub fn to_xy(&self) -> [Complex64; 4] {
        [
            self.o_plus + self.o_minus,
            self.o_plus - self.o_minus,
            self.tz_o_plus + self.tz_o_minus,
            self.tz_o_plus - self.tz_o_minus,
        ]
    }

    pub fn from_xy(xy: &[Complex64]) -> Self {
        Self {
            o_plus: 0.5 * (xy[0] + xy[1]),
            o_minus: 0.5 * (xy[0] - xy[1]),
            tz_o_plus: 0.5 * (xy[2] + xy[3]),
            tz_o_minus: 0.5 * (xy[2] - xy[3]),
        }
    }

    pub fn x_plus(&self) -> Complex64 {
        self.o_plus + self.o_minus
    }

    pub fn coherence(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.x_plus().norm()
    }
}

fn xy_rhs(y: &[Complex64], dy: &mut [Complex64], g: f64, lambda: f64, gamma: f64) {
    let (xp, xm, yp, ym) = (y[0], y[1], y[2], y[3]);
    dy[0] = -I * g * xm;
    dy[1] = -I * g * xp - I * (2.0 * lambda) * ym;
    dy[2] = -I * g * ym - 2.0 * gamma * yp;
    dy[3] = -I * g * yp - 2.0 * gamma * ym - I * (2.0 * lambda) * xm;
}

/// Time derivative of the reduced amplitudes.
pub fn reduced_rhs(state: &ReducedState, g: f64, lambda: f64, gamma: f64) -> ReducedState {
    let mut d = [Complex64::new(0.0, 0.0); 4];
    xy_rhs(&state.to_xy(), &mut d, g, lambda, gamma);
    ReducedState::from_xy(&d)
}

fn check_rates(g: f64, lambda: f64, gamma: f64) -> Result<()> {
    ensure(g.is_finite() && g >= 0.0, || format!("g must be nonnegative, got {g}"))?;
    ensure(lambda.is_finite(), || format!("lambda must be finite, got {lambda}"))?;
    ensure(gamma.is_finite() && gamma >= 0.0, || format!("gamma must be nonnegative, got {gamma}"))
}

pub fn reduced_states(g: f64, lambda: f64, gamma: f64, grid: &[f64], tol: Tolerances) -> Result<Vec<ReducedState>> {
    check_rates(g, lambda, gamma)?;
    let y0 = ReducedState::initial().to_xy();
    let out = DormandPrince::new(tol).integrate(|_, y, dy| xy_rhs(y, dy, g, lambda, gamma), &y0, grid, |_| {})?;
    Ok(out.iter().map(|y| ReducedState::from_xy(y)).collect())
}

/// Coherence `√2|X+(t)|` from the reduced equations.
pub fn integrate_reduced(g: f64, lambda: f64, gamma: f64, grid: &[f64], tol: Tolerances) -> Result<CoherenceTrace> {
    let states = reduced_states(g, lambda, gamma, grid, tol)?;
    let values = states.iter().map(|s| s.coherence().min(1.0 + 1e-12)).collect();
    Ok(CoherenceTrace::new(Provenance::Exact, grid.to_vec(), values))
}

/// `e^{-Γt}(cos ωt + (Γ/ω) sin ωt)` with `ω² = omega_sq`, continued to
/// `cosh`/`sinh` for `omega_sq < 0` and to `1 + Γt` at zero.
pub fn damped_oscillator(rate: f64, omega_sq: f64, t: f64) -> f64 {
    let x = omega_sq * t * t;
    if x.abs() < 1e-8 {
        // cos ωt ≈ 1 − ω²t²/2, sin(ωt)/ω ≈ t(1 − ω²t²/6), valid on both sides
        return (-rate * t).exp() * (1.0 - 0.5 * x + rate * t * (1.0 - x / 6.0));
    }
    if omega_sq > 0.0 {
        let w = omega_sq.sqrt();
        let (s, c) = (w * t).sin_cos();
        (-rate * t).exp() * (c + rate / w * s)
    } else {
        let k = (-omega_sq).sqrt();
        let r = rate / k;
        0.5 * ((1.0 + r) * ((k - rate) * t).exp() + (1.0 - r) * (-(k + rate) * t).exp())
    }
}

/// `e^{-γt}|cos gt (cos ηt + (γ/η) sin ηt)|` with `η = sqrt(λ² − γ²)`.
pub fn coherence_weak_damped(g: f64, lambda: f64, gamma: f64, t: f64) -> Result<f64> {
    check_rates(g, lambda, gamma)?;
    let env = damped_oscillator(gamma, lambda * lambda - gamma * gamma, t);
    Ok(((g * t).cos() * env).abs().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    WeakCoupling,
    StrongWeakDamp,
    StrongIntermediate,
    StrongStrongDamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Damping {
    Underdamped,
    Critical,
    Overdamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DampingRegime {
    pub kind: RegimeKind,
    pub damping: Option<Damping>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// `g >= coupling |λ|` is weak coupling.
    pub coupling: f64,
    /// `γ <= |λ|/damping` is weak damping, `γ >= damping |λ|` strong.
    pub damping: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            coupling: 5.0,
            damping: 5.0,
        }
    }
}

fn damping_of(rate: f64, omega: f64) -> Damping {
    if rate < omega {
        Damping::Underdamped
    } else if rate > omega {
        Damping::Overdamped
    } else {
        Damping::Critical
    }
}

pub fn classify_regime(g: f64, lambda: f64, gamma: f64) -> DampingRegime {
    classify_regime_with(g, lambda, gamma, RegimeThresholds::default())
}

pub fn classify_regime_with(g: f64, lambda: f64, gamma: f64, th: RegimeThresholds) -> DampingRegime {
    let l = lambda.abs();
    if g >= th.coupling * l {
        return DampingRegime {
            kind: RegimeKind::WeakCoupling,
            damping: Some(damping_of(gamma, l)),
        };
    }
    classify_strong(g, lambda, gamma, th)
}

/// Damping classification assuming strong coupling.
pub fn classify_strong(g: f64, lambda: f64, gamma: f64, th: RegimeThresholds) -> DampingRegime {
    let l = lambda.abs();
    if gamma * th.damping <= l {
        DampingRegime {
            kind: RegimeKind::StrongWeakDamp,
            damping: Some(damping_of(gamma, g * g / (2.0 * l))),
        }
    } else if gamma >= th.damping * l {
        DampingRegime {
            kind: RegimeKind::StrongStrongDamp,
            damping: Some(damping_of(l * l / gamma, g)),
        }
    } else {
        DampingRegime {
            kind: RegimeKind::StrongIntermediate,
            damping: None,
        }
    }
}

/// Closed forms for `|λ| >> g` in the given damping regime.
pub fn coherence_strong_damped(g: f64, lambda: f64, gamma: f64, t: f64, regime: DampingRegime) -> Result<f64> {
    check_rates(g, lambda, gamma)?;
    let l = lambda.abs();
    let value = match regime.kind {
        RegimeKind::WeakCoupling => {
            return Err(Error::RegimeViolation(
                "weak-coupling regime has its own closed form".into(),
            ))
        }
        RegimeKind::StrongWeakDamp => {
            ensure_nonzero(l)?;
            let w = g * g / (2.0 * l);
            damped_oscillator(gamma, w * w - gamma * gamma, t).abs()
        }
        RegimeKind::StrongIntermediate => {
            ensure_nonzero(l)?;
            (-g * g * gamma * t / (2.0 * l * l)).exp()
        }
        RegimeKind::StrongStrongDamp => {
            ensure(gamma > 0.0, || "strong damping needs gamma > 0".into())?;
            let rate = l * l / gamma;
            damped_oscillator(rate, g * g - rate * rate, t).abs()
        }
    };
    Ok(value.min(1.0))
}

fn ensure_nonzero(l: f64) -> Result<()> {
    if l == 0.0 {
        Err(Error::RegimeViolation("strong-coupling formulas need lambda != 0".into()))
    } else {
        Ok(())
    }
}

/// Largest real root of `x³ + 2γx² + (g² + 4λ²)x + 2γg² = 0`, the mode that
/// tends to zero as `g → 0`.
pub fn slow_root_cubic(g: f64, lambda: f64, gamma: f64) -> Result<f64> {
    ensure(g > 0.0 && lambda != 0.0 && gamma > 0.0 && g.is_finite() && lambda.is_finite() && gamma.is_finite(), || {
        format!("slow root needs positive rates, got g = {g}, lambda = {lambda}, gamma = {gamma}")
    })?;
    let b = 2.0 * gamma;
    let c = g * g + 4.0 * lambda * lambda;
    let d = 2.0 * gamma * g * g;
    let p = |x: f64| ((x + b) * x + c) * x + d;
    let dp = |x: f64| (3.0 * x + 2.0 * b) * x + c;

    // p(0) > 0 and all coefficients are positive, so every real root is
    // negative. The largest lies right of the local minimum if that dips
    // below zero, otherwise left of the local maximum.
    let disc = b * b - 3.0 * c;
    let bound = -(1.0 + b.max(c).max(d));
    let (mut lo, mut hi) = if disc > 0.0 {
        let c_max = (-b - disc.sqrt()) / 3.0;
        let c_min = (-b + disc.sqrt()) / 3.0;
        if p(c_min) <= 0.0 {
            (c_min, 0.0)
        } else {
            (bound.min(c_max), c_max)
        }
    } else {
        (bound, 0.0)
    };
    debug_assert!(p(lo) <= 0.0 && p(hi) >= 0.0);
    // Newton from the right end, bisection as a safeguard.
    let mut x = hi;
    for _ in 0..400 {
        let fx = p(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = fx / dp(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * lo.abs() {
            return Ok(next);
        }
        x = next;
    }
    assert!(p(lo) <= 0.0 && p(hi) >= 0.0, "slow root bracket lost");
    Ok(0.5 * (lo + hi))
}

/// Quadratic approximation `x = −λ²/γ + sqrt((λ²/γ)² − g²)`; complex when
/// `g > λ²/γ`.
pub fn slow_root_quadratic(g: f64, lambda: f64, gamma: f64) -> Complex64 {
    let r = lambda * lambda / gamma;
    -r + Complex64::new(r * r - g * g, 0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipativeMethod {
    ReducedOde,
    Lindblad,
    WeakDamped,
    StrongDamped,
    SlowRoot,
}

impl DissipativeMethod {
    pub const ALL: [DissipativeMethod; 5] = [
        DissipativeMethod::ReducedOde,
        DissipativeMethod::Lindblad,
        DissipativeMethod::WeakDamped,
        DissipativeMethod::StrongDamped,
        DissipativeMethod::SlowRoot,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            DissipativeMethod::ReducedOde => "reduced_ode",
            DissipativeMethod::Lindblad => "lindblad",
            DissipativeMethod::WeakDamped => "weak_damped",
            DissipativeMethod::StrongDamped => "strong_damped",
            DissipativeMethod::SlowRoot => "slow_root",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn trace(self, g: f64, lambda: f64, gamma: f64, grid: &[f64], tol: Tolerances) -> Result<Vec<f64>> {
        let pointwise = |f: &dyn Fn(f64) -> Result<f64>| grid.iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>();
        match self {
            DissipativeMethod::ReducedOde => Ok(integrate_reduced(g, lambda, gamma, grid, tol)?.values),
            DissipativeMethod::Lindblad => {
                let tlf = TlfSpec::new(0.0, lambda);
                Ok(oracle_lindblad_coherence(&JcParams::resonant(g), &tlf, gamma, grid, tol)?.values)
            }
            DissipativeMethod::WeakDamped => pointwise(&|t| coherence_weak_damped(g, lambda, gamma, t)),
            DissipativeMethod::StrongDamped => {
                let regime = classify_regime(g, lambda, gamma);
                pointwise(&|t| coherence_strong_damped(g, lambda, gamma, t, regime))
            }
            DissipativeMethod::SlowRoot => {
                let root = slow_root_cubic(g, lambda, gamma)?;
                Ok(grid.iter().map(|t| (root * t).exp()).collect())
            }
        }
    }
}

/// Regime notes for a closed form at the given rates.
pub fn regime_warnings(method: DissipativeMethod, g: f64, lambda: f64, gamma: f64) -> Vec<RegimeWarning> {
    let th = RegimeThresholds::default();
    let regime = classify_regime_with(g, lambda, gamma, th);
    let weak = regime.kind == RegimeKind::WeakCoupling;
    match method {
        DissipativeMethod::WeakDamped if !weak => vec![RegimeWarning(format!(
            "weak-coupling damped formula used with g/|lambda| = {:.3}",
            g / lambda.abs()
        ))],
        DissipativeMethod::StrongDamped | DissipativeMethod::SlowRoot if weak => vec![RegimeWarning(format!(
            "strong-coupling damped formula used with |lambda|/g = {:.3}",
            lambda.abs() / g
        ))],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{crossing_frequency, envelope_decay_rate, fit_log_linear, zero_crossings};
    use crate::model::{linspace, JcParams, ThermalContext, TlfSpec};
    use crate::oracle::oracle_lindblad_coherence;
    use crate::single::coherence_exact_single;

    const TOL: Tolerances = Tolerances { rel: 1e-9, abs: 1e-11 };

    #[test]
    fn rhs_examples() {
        let s = ReducedState::from_xy(&[
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.4),
            Complex64::new(0.1, 0.0),
            Complex64::new(0.05, -0.3),
        ]);
        let d = reduced_rhs(&s, 0.0, 0.07, 0.02);
        assert_eq!(d.x_plus(), Complex64::new(0.0, 0.0));

        let grid = linspace(0.0, 200.0, 101);
        let states = reduced_states(0.1, 0.0, 0.0, &grid, TOL).unwrap();
        for (t, s) in grid.iter().zip(&states) {
            let expected = (0.1 * t).cos() * std::f64::consts::FRAC_1_SQRT_2;
            assert!((s.x_plus() - expected).norm() < 1e-8);
        }
    }

    #[test]
    fn rhs_matches_finite_difference() {
        let (g, lambda, gamma) = (0.1, 0.03, 0.02);
        let h = 1e-4;
        let states = reduced_states(g, lambda, gamma, &[5.0, 5.0 + h], Tolerances::strict()).unwrap();
        let d = reduced_rhs(&states[0], g, lambda, gamma).to_xy();
        let (a, b) = (states[0].to_xy(), states[1].to_xy());
        for k in 0..4 {
            let fd = (b[k] - a[k]) / h;
            assert!((fd - d[k]).norm() < 1e-4 * (1.0 + d[k].norm()), "component {k}");
        }
    }

    #[test]
    fn closed_system_matches_exact_single() {
        let (g, lambda) = (0.1, 0.01);
        let grid = linspace(0.0, 2.0 * std::f64::consts::PI / lambda, 501);
        let ode = integrate_reduced(g, lambda, 0.0, &grid, TOL).unwrap();
        let p = JcParams::resonant(g);
        let tlf = TlfSpec::new(0.1, lambda);
        for (t, v) in grid.iter().zip(&ode.values) {
            let exact = coherence_exact_single(&p, &tlf, ThermalContext::ScaleSeparated, *t).unwrap();
            assert!((v - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn reduced_matches_lindblad_oracle() {
        let (g, lambda) = (0.1, 0.01);
        for gamma in [0.1 * lambda, lambda, 10.0 * lambda] {
            let grid = linspace(0.0, 1500.0, 301);
            let ode = integrate_reduced(g, lambda, gamma, &grid, TOL).unwrap();
            let oracle = oracle_lindblad_coherence(
                &JcParams::resonant(g),
                &TlfSpec::new(0.1, lambda),
                gamma,
                &grid,
                TOL,
            )
            .unwrap();
            assert!(ode.sup_distance(&oracle) < 1e-6, "gamma {gamma}");
        }
    }

    #[test]
    fn intermediate_decay_rate() {
        let (g, lambda, gamma) = (0.01, 0.1, 0.1);
        let expected = g * g * gamma / (2.0 * lambda * lambda);
        let grid = linspace(0.0, 3.0 / expected, 3001);
        let ode = integrate_reduced(g, lambda, gamma, &grid, TOL).unwrap();
        let (rate, _) = fit_log_linear(&grid, &ode.values).unwrap();
        assert!((rate / expected - 1.0).abs() < 0.1);
    }

    #[test]
    fn weak_damped_examples() {
        let (g, lambda) = (0.1, 0.01);
        for t in linspace(0.0, 2000.0, 101) {
            let v = coherence_weak_damped(g, lambda, 0.0, t).unwrap();
            assert!((v - ((g * t).cos() * (lambda * t).cos()).abs()).abs() < 1e-14);
            let crit = coherence_weak_damped(g, lambda, lambda, t).unwrap();
            let expected = (-lambda * t).exp() * (1.0 + lambda * t) * (g * t).cos().abs();
            assert!((crit - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn weak_damped_overdamped_rate() {
        let (g, lambda) = (0.1, 0.01);
        let gamma = 10.0 * lambda;
        let expected = lambda * lambda / (2.0 * gamma);
        let grid = linspace(0.0, 4.0 * 2.0 * gamma / (lambda * lambda), 40001);
        let vals: Vec<f64> = grid.iter().map(|&t| coherence_weak_damped(g, lambda, gamma, t).unwrap()).collect();
        let rate = envelope_decay_rate(&grid, &vals, 3.0).unwrap();
        assert!((rate / expected - 1.0).abs() < 0.05, "{rate} vs {expected}");
    }

    #[test]
    fn weak_damped_continuous_at_critical() {
        let (g, lambda) = (0.1, 0.01);
        for t in [1.0, 37.0, 400.0, 3000.0] {
            let lo = coherence_weak_damped(g, lambda, lambda * (1.0 - 1e-12), t).unwrap();
            let hi = coherence_weak_damped(g, lambda, lambda * (1.0 + 1e-12), t).unwrap();
            let mid = coherence_weak_damped(g, lambda, lambda, t).unwrap();
            assert!((lo - hi).abs() < 1e-9 && (lo - mid).abs() < 1e-9);
        }
        // away from the series window
        for t in [10.0, 500.0] {
            let lo = coherence_weak_damped(g, lambda, lambda * (1.0 - 1e-6), t).unwrap();
            let hi = coherence_weak_damped(g, lambda, lambda * (1.0 + 1e-6), t).unwrap();
            assert!((lo - hi).abs() < 1e-6);
        }
    }

    #[test]
    fn strong_damped_examples() {
        let (g, lambda) = (0.01, 0.1);
        let weak = classify_strong(g, lambda, 0.0, RegimeThresholds::default());
        assert_eq!(weak.kind, RegimeKind::StrongWeakDamp);
        for t in linspace(0.0, 1e4, 51) {
            let v = coherence_strong_damped(g, lambda, 0.0, t, weak).unwrap();
            assert!((v - (g * g * t / (2.0 * lambda)).cos().abs()).abs() < 1e-14);
        }

        let gamma = 0.1;
        let regime = classify_regime(g, lambda, gamma);
        assert_eq!(regime.kind, RegimeKind::StrongIntermediate);
        let rate = g * g * gamma / (2.0 * lambda * lambda);
        let grid = linspace(0.0, 5.0 / rate, 2001);
        let ode = integrate_reduced(g, lambda, gamma, &grid, TOL).unwrap();
        let closed: Vec<f64> = grid.iter().map(|&t| coherence_strong_damped(g, lambda, gamma, t, regime).unwrap()).collect();
        assert!(crate::model::sup_distance(&ode.values, &closed) < 0.03);

        assert!(matches!(
            coherence_strong_damped(0.1, 0.01, 0.0, 1.0, classify_regime(0.1, 0.01, 0.0)),
            Err(Error::RegimeViolation(_))
        ));
    }

    #[test]
    fn strong_damping_restores_rabi_frequency() {
        let (g, lambda) = (0.01, 0.1);
        let gamma = 100.0 * lambda;
        let grid = linspace(0.0, 3000.0, 30001);
        let states = reduced_states(g, lambda, gamma, &grid, TOL).unwrap();
        let re: Vec<f64> = states.iter().map(|s| s.x_plus().re).collect();
        let w = crossing_frequency(&zero_crossings(&grid, &re)).unwrap();
        assert!((w / g - 1.0).abs() < 0.05, "{w}");
    }

    #[test]
    fn classifier_examples() {
        assert_eq!(classify_regime(0.1, 0.01, 3.0).kind, RegimeKind::WeakCoupling);
        assert_eq!(classify_regime(0.1, 0.01, 0.001).damping, Some(Damping::Underdamped));
        assert_eq!(classify_regime(0.01, 0.1, 0.1).kind, RegimeKind::StrongIntermediate);
        assert_eq!(classify_regime(0.01, 0.1, 2.0).kind, RegimeKind::StrongStrongDamp);
        assert_eq!(classify_regime(0.01, 0.1, 0.01).kind, RegimeKind::StrongWeakDamp);
        let loose = RegimeThresholds { coupling: 5.0, damping: 20.0 };
        assert_eq!(classify_regime_with(0.01, 0.1, 0.01, loose).kind, RegimeKind::StrongIntermediate);
    }

    #[test]
    fn slow_root_examples() {
        let (g, lambda, gamma) = (0.01, 0.1, 0.1);
        let x = slow_root_cubic(g, lambda, gamma).unwrap();
        let approx = -g * g * gamma / (2.0 * lambda * lambda);
        assert!((x / approx - 1.0).abs() < 0.05);
        let p = x.powi(3) + 2.0 * gamma * x * x + (g * g + 4.0 * lambda * lambda) * x + 2.0 * gamma * g * g;
        assert!(p.abs() < 1e-18);

        let tiny = slow_root_cubic(1e-6, lambda, gamma).unwrap();
        assert!(tiny < 0.0 && tiny > -1e-10);

        // three real roots: the largest one is returned
        let x = slow_root_cubic(0.001, 0.1, 1.0).unwrap();
        let q = slow_root_quadratic(0.001, 0.1, 1.0);
        assert!(x < 0.0 && x > -1e-4);
        assert!((x - q.re).abs() / x.abs() < 0.05);

        assert!(slow_root_cubic(0.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn slow_root_tracks_reduced_envelope() {
        let (g, lambda, gamma) = (0.01, 0.1, 0.1);
        let x = slow_root_cubic(g, lambda, gamma).unwrap();
        let grid = linspace(0.0, 3.0 / x.abs(), 1001);
        let ode = integrate_reduced(g, lambda, gamma, &grid, TOL).unwrap();
        let closed: Vec<f64> = grid.iter().map(|t| (x * t).exp()).collect();
        assert!(crate::model::sup_distance(&ode.values, &closed) < 0.02);
    }
}
