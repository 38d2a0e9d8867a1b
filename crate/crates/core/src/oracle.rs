//! Brute-force reference: the full Hamiltonian on a truncated Hilbert space,
//! unitary and local-Lindblad evolution, and the coherence measure.
//!
//! Basis order is oscillator ⊗ TLS ⊗ TLF₁ ⊗ … ⊗ TLF_N with the oscillator as
//! the slowest index. TLS index 0 is `|g>` (σz = −1) and 1 is `|e>`. TLF index
//! 0 is `|+>` (τz = +1, the upper state) and 1 is `|->`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::model::{thermal_population, CoherenceTrace, JcParams, Provenance, ThermalContext, TlfSpec};
use crate::numerics::{DormandPrince, Tolerances};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpec {
    pub n_osc: usize,
    pub n_tlf: usize,
    pub cap: usize,
}

impl HilbertSpec {
    pub fn new(n_osc: usize, n_tlf: usize) -> Result<Self> {
        Self::with_cap(n_osc, n_tlf, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(n_osc: usize, n_tlf: usize, cap: usize) -> Result<Self> {
        let spec = Self { n_osc, n_tlf, cap };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_osc >= 2, || {
            format!("oscillator truncation must be at least 2, got {}", self.n_osc)
        })?;
        let dim = self
            .n_tlf
            .try_into()
            .ok()
            .and_then(|n: u32| 2usize.checked_pow(n))
            .and_then(|b| b.checked_mul(2 * self.n_osc));
        match dim {
            Some(d) if d <= self.cap => Ok(()),
            Some(d) => Err(Error::Capacity { dim: d, cap: self.cap }),
            None => Err(Error::Capacity { dim: usize::MAX, cap: self.cap }),
        }
    }

    pub fn dim(&self) -> usize {
        self.n_osc * self.stride()
    }

    /// Number of basis states per oscillator level.
    fn stride(&self) -> usize {
        2 << self.n_tlf
    }

    fn tlf_states(&self) -> usize {
        1 << self.n_tlf
    }
}

/// `Lab` is the Hamiltonian as written. `Rotating` removes the conserved
/// parts `omega0 (a†a + σz/2)` and `Σ (ε_j/2) τz_j`; this changes `<a(t)>` by
/// a pure phase only, so the coherence is unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    Lab,
    #[default]
    Rotating,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub rho: DMatrix<Complex64>,
    pub spec: HilbertSpec,
}

impl DenseState {
    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<DVector<f64>> {
        let h = hermitian_part(&self.rho);
        h.try_symmetric_eigen(1e-15, 0)
            .map(|e| e.eigenvalues)
            .ok_or_else(|| Error::Eigen("density matrix did not converge".into()))
    }

    /// `Tr(a ρ)`.
    pub fn a_expectation(&self) -> Complex64 {
        let stride = self.spec.stride();
        let mut acc = ZERO;
        for n in 1..self.spec.n_osc {
            let amp = (n as f64).sqrt();
            for r in 0..stride {
                acc += self.rho[(n * stride + r, (n - 1) * stride + r)] * amp;
            }
        }
        acc
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_tlfs(tlfs: &[TlfSpec], spec: &HilbertSpec) -> Result<()> {
    ensure(tlfs.len() == spec.n_tlf, || {
        format!("{} fluctuators given for a space with {}", tlfs.len(), spec.n_tlf)
    })?;
    tlfs.iter().try_for_each(TlfSpec::validate)
}

/// Diagonal energy of basis state `idx`.
fn diagonal_energy(params: &JcParams, tlfs: &[TlfSpec], spec: &HilbertSpec, idx: usize, frame: Frame) -> f64 {
    let stride = spec.stride();
    let n = (idx / stride) as f64;
    let rest = idx % stride;
    let sz = if rest / spec.tlf_states() == 0 { -1.0 } else { 1.0 };
    let bits = rest % spec.tlf_states();
    let mut e = match frame {
        Frame::Lab => params.omega0 * n + 0.5 * params.epsilon_t * sz,
        Frame::Rotating => 0.5 * params.detuning() * sz,
    };
    for (j, tlf) in tlfs.iter().enumerate() {
        let tz = if (bits >> (spec.n_tlf - 1 - j)) & 1 == 0 { 1.0 } else { -1.0 };
        if frame == Frame::Lab {
            e += 0.5 * tlf.epsilon * tz;
        }
        e += tlf.lambda * sz * tz;
    }
    e
}

pub fn build_hamiltonian(params: &JcParams, tlfs: &[TlfSpec], spec: &HilbertSpec) -> Result<DMatrix<Complex64>> {
    build_hamiltonian_in(params, tlfs, spec, Frame::Lab)
}

pub fn build_hamiltonian_in(
    params: &JcParams,
    tlfs: &[TlfSpec],
    spec: &HilbertSpec,
    frame: Frame,
) -> Result<DMatrix<Complex64>> {
    params.validate()?;
    spec.validate()?;
    check_tlfs(tlfs, spec)?;
    let d = spec.dim();
    let stride = spec.stride();
    let half = spec.tlf_states();
    let mut h = DMatrix::from_element(d, d, ZERO);
    for idx in 0..d {
        h[(idx, idx)] = Complex64::new(diagonal_energy(params, tlfs, spec, idx, frame), 0.0);
    }
    // g a σ+ : |n, g, r> -> sqrt(n) |n-1, e, r>
    for n in 1..spec.n_osc {
        let amp = Complex64::new(params.g * (n as f64).sqrt(), 0.0);
        for r in 0..half {
            let from = n * stride + r;
            let to = (n - 1) * stride + half + r;
            h[(to, from)] = amp;
            h[(from, to)] = amp;
        }
    }
    Ok(h)
}

/// `ρ(0) = |ψ><ψ| ⊗ |g><g| ⊗ ⨂_j diag(p+_j, p-_j)` with `ψ = c0|0> + c1|1>`.
pub fn initial_state(
    c0: Complex64,
    c1: Complex64,
    tlfs: &[TlfSpec],
    ctx: ThermalContext,
    spec: &HilbertSpec,
) -> Result<DenseState> {
    spec.validate()?;
    check_tlfs(tlfs, spec)?;
    let norm = c0.norm_sqr() + c1.norm_sqr();
    ensure((norm - 1.0).abs() <= 1e-12, || {
        format!("amplitudes must be normalized, |c0|^2 + |c1|^2 = {norm}")
    })?;
    let pops = tlfs
        .iter()
        .map(|t| thermal_population(t.epsilon, ctx))
        .collect::<Result<Vec<_>>>()?;
    let half = spec.tlf_states();
    let weights: Vec<f64> = (0..half)
        .map(|bits| {
            pops.iter().enumerate().fold(1.0, |w, (j, &(pp, pm))| {
                w * if (bits >> (spec.n_tlf - 1 - j)) & 1 == 0 { pp } else { pm }
            })
        })
        .collect();
    let d = spec.dim();
    let stride = spec.stride();
    let amps = [c0, c1];
    let mut rho = DMatrix::from_element(d, d, ZERO);
    for (n, an) in amps.iter().enumerate() {
        for (m, am) in amps.iter().enumerate() {
            let c = an * am.conj();
            for (r, w) in weights.iter().enumerate() {
                rho[(n * stride + r, m * stride + r)] = c * *w;
            }
        }
    }
    Ok(DenseState { rho, spec: *spec })
}

/// Eigendecomposition `H = V diag(E) V†`, reused across time points.
pub struct Propagator {
    energies: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        ensure(h.is_square(), || "Hamiltonian must be square".into())?;
        let herm = (h - h.adjoint()).camax();
        ensure(herm <= 1e-12 * h.camax().max(1.0), || {
            format!("Hamiltonian is not Hermitian (max |H - H†| = {herm:e})")
        })?;
        let eig = hermitian_part(h).try_symmetric_eigen(1e-15, 0).ok_or_else(|| {
            Error::Eigen(format!(
                "Hermitian eigensolver did not converge for a {}x{} matrix with max |H_ij| = {:e}",
                h.nrows(),
                h.ncols(),
                h.camax()
            ))
        })?;
        Ok(Self {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// `ρ(t) = V (e^{-i(E_i - E_j)t} ⊙ V†ρV) V†`.
    pub fn evolve(&self, rho0: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
        let v = &self.vectors;
        let mut r = v.adjoint() * rho0 * v;
        apply_phases(&mut r, &self.energies, t);
        v * r * v.adjoint()
    }

    /// `Tr(a ρ(t))` at every grid time without forming `ρ(t)`.
    pub fn a_expectation_trace(&self, rho0: &DenseState, grid: &[f64]) -> Vec<Complex64> {
        let v = &self.vectors;
        let r = v.adjoint() * &rho0.rho * v;
        let a = annihilation(&rho0.spec);
        let av = v.adjoint() * a * v;
        // Tr(a ρ(t)) = Σ_ij (V†aV)_ji r_ij e^{-i(E_i - E_j)t}
        let d = r.nrows();
        let mut terms = Vec::new();
        let mut scale = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                let w = av[(j, i)] * r[(i, j)];
                scale = scale.max(w.norm());
                terms.push((w, self.energies[i] - self.energies[j]));
            }
        }
        // Dropped terms sum to at most 1e-16 of the largest one.
        let cut = 1e-16 * scale / (d * d) as f64;
        terms.retain(|(w, _)| w.norm() > cut);
        grid.iter()
            .map(|&t| {
                let mut acc = crate::numerics::CompensatedSum::new();
                for (w, f) in &terms {
                    acc.add(w * Complex64::from_polar(1.0, -f * t));
                }
                acc.value()
            })
            .collect()
    }
}

fn apply_phases(r: &mut DMatrix<Complex64>, energies: &DVector<f64>, t: f64) {
    let d = r.nrows();
    let phases: Vec<Complex64> = energies.iter().map(|e| Complex64::from_polar(1.0, -e * t)).collect();
    for j in 0..d {
        let pj = phases[j].conj();
        for i in 0..d {
            r[(i, j)] *= phases[i] * pj;
        }
    }
}

/// Truncated annihilation operator on the full space.
pub fn annihilation(spec: &HilbertSpec) -> DMatrix<Complex64> {
    let d = spec.dim();
    let stride = spec.stride();
    let mut a = DMatrix::from_element(d, d, ZERO);
    for n in 1..spec.n_osc {
        let amp = Complex64::new((n as f64).sqrt(), 0.0);
        for r in 0..stride {
            a[((n - 1) * stride + r, n * stride + r)] = amp;
        }
    }
    a
}

pub fn evolve_unitary(h: &DMatrix<Complex64>, rho0: &DenseState, grid: &[f64]) -> Result<Vec<DenseState>> {
    crate::numerics::ode::check_grid(grid)?;
    ensure(h.nrows() == rho0.rho.nrows(), || "Hamiltonian and state dimensions differ".into())?;
    let prop = Propagator::new(h)?;
    Ok(grid
        .iter()
        .map(|&t| DenseState {
            rho: if t == 0.0 { rho0.rho.clone() } else { prop.evolve(&rho0.rho, t) },
            spec: rho0.spec,
        })
        .collect())
}

/// Coherence under unitary evolution, computed directly from the spectral
/// decomposition. Preferred over [`evolve_unitary`] for long grids.
pub fn unitary_coherence(h: &DMatrix<Complex64>, rho0: &DenseState, grid: &[f64]) -> Result<CoherenceTrace> {
    crate::numerics::ode::check_grid(grid)?;
    let a0 = rho0.a_expectation();
    if a0.norm() == 0.0 {
        return Err(Error::UndefinedCoherence);
    }
    let prop = Propagator::new(h)?;
    let values = prop
        .a_expectation_trace(rho0, grid)
        .into_iter()
        .zip(grid)
        .map(|(a, &t)| if t == 0.0 { 1.0 } else { a.norm() / a0.norm() })
        .collect();
    Ok(CoherenceTrace::new(Provenance::Oracle, grid.to_vec(), values))
}

#[derive(Debug, Clone, Copy)]
pub struct LindbladOptions {
    pub frame: Frame,
    pub tolerances: Tolerances,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            frame: Frame::Rotating,
            tolerances: Tolerances::default(),
        }
    }
}

/// Local Lindblad equation for a single fluctuator flipping at equal up and
/// down rates `gamma`:
/// `dρ/dt = -i[H, ρ] + γ(τ-ρτ+ + τ+ρτ-) - γρ`.
pub fn evolve_lindblad(
    params: &JcParams,
    tlf: &TlfSpec,
    gamma: f64,
    rho0: &DenseState,
    grid: &[f64],
    opts: LindbladOptions,
) -> Result<Vec<DenseState>> {
    ensure(gamma.is_finite() && gamma >= 0.0, || format!("gamma must be nonnegative, got {gamma}"))?;
    ensure(rho0.spec.n_tlf == 1, || "Lindblad evolution supports exactly one fluctuator".into())?;
    let spec = rho0.spec;
    let h = build_hamiltonian_in(params, std::slice::from_ref(tlf), &spec, opts.frame)?;
    let d = spec.dim();
    let hm: Vec<Complex64> = h.iter().copied().collect();

    let rhs = |_: f64, y: &[Complex64], dy: &mut [Complex64]| {
        // column-major: element (i, j) at i + j d
        for j in 0..d {
            for i in 0..d {
                let mut c = ZERO;
                for k in 0..d {
                    c += hm[i + k * d] * y[k + j * d] - y[i + k * d] * hm[k + j * d];
                }
                let mut v = Complex64::new(c.im, -c.re) - y[i + j * d] * gamma;
                // τ∓ρτ± flips the last tensor factor on both sides
                if (i ^ j) & 1 == 0 {
                    v += y[(i ^ 1) + (j ^ 1) * d] * gamma;
                }
                dy[i + j * d] = v;
            }
        }
    };
    let project = |y: &mut [Complex64]| {
        for j in 0..d {
            for i in (j + 1)..d {
                let m = 0.5 * (y[i + j * d] + y[j + i * d].conj());
                y[i + j * d] = m;
                y[j + i * d] = m.conj();
            }
            y[j + j * d].im = 0.0;
        }
    };
    let y0: Vec<Complex64> = rho0.rho.iter().copied().collect();
    let out = DormandPrince::new(opts.tolerances).integrate(rhs, &y0, grid, project)?;
    Ok(out
        .into_iter()
        .map(|y| DenseState {
            rho: DMatrix::from_vec(d, d, y),
            spec,
        })
        .collect())
}

/// `C(t_k) = |Tr(a ρ(t_k))| / |a0|`.
pub fn coherence_from_state(states: &[DenseState], times: &[f64], a0: Complex64) -> Result<CoherenceTrace> {
    ensure(states.len() == times.len(), || "one state per time is required".into())?;
    if a0.norm() == 0.0 {
        return Err(Error::UndefinedCoherence);
    }
    let values = states.iter().map(|s| s.a_expectation().norm() / a0.norm()).collect();
    Ok(CoherenceTrace::new(Provenance::Oracle, times.to_vec(), values))
}

/// Oracle coherence for the standard initial state `(|0> + |1>)/√2` with
/// thermal fluctuators and unitary dynamics.
pub fn oracle_coherence(
    params: &JcParams,
    tlfs: &[TlfSpec],
    ctx: ThermalContext,
    n_osc: usize,
    grid: &[f64],
) -> Result<CoherenceTrace> {
    let spec = HilbertSpec::new(n_osc, tlfs.len())?;
    let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho0 = initial_state(c, c, tlfs, ctx, &spec)?;
    let h = build_hamiltonian_in(params, tlfs, &spec, Frame::Rotating)?;
    unitary_coherence(&h, &rho0, grid)
}

/// Oracle coherence under the local Lindblad equation for one fluctuator in
/// the scale-separated regime.
pub fn oracle_lindblad_coherence(
    params: &JcParams,
    tlf: &TlfSpec,
    gamma: f64,
    grid: &[f64],
    tolerances: Tolerances,
) -> Result<CoherenceTrace> {
    let spec = HilbertSpec::new(2, 1)?;
    let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho0 = initial_state(c, c, std::slice::from_ref(tlf), ThermalContext::ScaleSeparated, &spec)?;
    let a0 = rho0.a_expectation();
    let opts = LindbladOptions {
        frame: Frame::Rotating,
        tolerances,
    };
    let states = evolve_lindblad(params, tlf, gamma, &rho0, grid, opts)?;
    coherence_from_state(&states, grid, a0)
}
