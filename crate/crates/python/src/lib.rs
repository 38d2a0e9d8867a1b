//! Python bindings for `tlfsim`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tlfsim::dissipative::{classify_regime as classify, slow_root_cubic, DissipativeMethod};
use tlfsim::ensemble::{
    ensemble_stats as stats_of, exact_ensemble_trace, EnsembleMethod, EnsembleStats as CoreStats, TlfEnsemble,
};
use tlfsim::microscopic::{average_variance_mc, MaterialParams, VarianceDomain};
use tlfsim::numerics::Tolerances;
use tlfsim::scenario::{run_scenario, validate_config};
use tlfsim::single::SingleMethod;
use tlfsim::{Error, ThermalContext, TlfSpec};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::RegimeViolation(_) | Error::CutoffViolation { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn thermal(kt: Option<f64>) -> PyResult<ThermalContext> {
    let ctx = match kt {
        None => ThermalContext::ScaleSeparated,
        Some(kt) if kt.is_infinite() => ThermalContext::ScaleSeparated,
        Some(kt) => ThermalContext::FiniteTemperature { kt },
    };
    ctx.validate().map_err(to_py)?;
    Ok(ctx)
}

fn unknown(what: &str, tag: &str) -> PyErr {
    PyValueError::new_err(format!("unknown {what} method `{tag}`"))
}

/// Oscillator-TLS parameters. `delta` is `epsilon_t - omega0`.
#[pyclass(frozen, name = "JcParams")]
struct JcParams(tlfsim::JcParams);

#[pymethods]
impl JcParams {
    #[new]
    #[pyo3(signature = (g, delta = 0.0, omega0 = 1.0))]
    fn new(g: f64, delta: f64, omega0: f64) -> PyResult<Self> {
        tlfsim::JcParams::new(omega0, omega0 + delta, g).map(Self).map_err(to_py)
    }

    #[getter]
    fn g(&self) -> f64 {
        self.0.g
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.0.omega0
    }

    #[getter]
    fn epsilon_t(&self) -> f64 {
        self.0.epsilon_t
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.detuning()
    }

    #[getter]
    fn rabi_frequency(&self) -> f64 {
        self.0.rabi_frequency()
    }

    fn __repr__(&self) -> String {
        format!("JcParams(g={}, delta={}, omega0={})", self.0.g, self.0.detuning(), self.0.omega0)
    }
}

/// One fluctuator with splitting `epsilon` and coupling `lambda_`.
#[pyclass(frozen, name = "Tlf")]
struct Tlf(TlfSpec);

#[pymethods]
impl Tlf {
    #[new]
    #[pyo3(signature = (epsilon, lambda_))]
    fn new(epsilon: f64, lambda_: f64) -> PyResult<Self> {
        let spec = TlfSpec::new(epsilon, lambda_);
        spec.validate().map_err(to_py)?;
        Ok(Self(spec))
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    fn __repr__(&self) -> String {
        format!("Tlf(epsilon={}, lambda_={})", self.0.epsilon, self.0.lambda)
    }
}

#[pyclass(frozen, name = "EnsembleStats")]
struct EnsembleStats(CoreStats);

#[pymethods]
impl EnsembleStats {
    #[new]
    fn new(mu: f64, sigma: f64) -> PyResult<Self> {
        CoreStats::from_moments(mu, sigma).map(Self).map_err(to_py)
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    /// Largest single-fluctuator share of the variance, when known.
    #[getter]
    fn r(&self) -> Option<f64> {
        self.0.r
    }

    fn __repr__(&self) -> String {
        format!("EnsembleStats(mu={}, sigma={}, r={:?})", self.0.mu, self.0.sigma(), self.0.r)
    }
}

#[pyclass(frozen, get_all, name = "McEstimate")]
struct McEstimate {
    mean: f64,
    std_error: f64,
    samples: usize,
    radial_remainder: f64,
}

fn specs(tlfs: &[PyRef<'_, Tlf>]) -> Vec<TlfSpec> {
    tlfs.iter().map(|t| t.0).collect()
}

#[pyfunction]
fn coherence_gr(params: PyRef<'_, JcParams>, times: Vec<f64>) -> PyResult<Vec<f64>> {
    times.iter().map(|&t| tlfsim::coherence_gr(&params.0, t)).collect::<Result<_, _>>().map_err(to_py)
}

/// Single frozen fluctuator: `exact`, `weak_envelope`, `strong_leading` or `strong_higher`.
#[pyfunction]
#[pyo3(signature = (params, tlf, times, method = "exact", kt = None))]
fn coherence_single(
    params: PyRef<'_, JcParams>,
    tlf: PyRef<'_, Tlf>,
    times: Vec<f64>,
    method: &str,
    kt: Option<f64>,
) -> PyResult<Vec<f64>> {
    let m = SingleMethod::from_tag(method).ok_or_else(|| unknown("single-fluctuator", method))?;
    let ctx = thermal(kt)?;
    times.iter().map(|&t| m.eval(&params.0, &tlf.0, ctx, t)).collect::<Result<_, _>>().map_err(to_py)
}

/// Dense-matrix reference with `n_osc` oscillator levels.
#[pyfunction]
#[pyo3(signature = (params, tlfs, times, kt = None, n_osc = 2))]
fn oracle_coherence(
    py: Python<'_>,
    params: PyRef<'_, JcParams>,
    tlfs: Vec<PyRef<'_, Tlf>>,
    times: Vec<f64>,
    kt: Option<f64>,
    n_osc: usize,
) -> PyResult<Vec<f64>> {
    let (p, specs, ctx) = (params.0, specs(&tlfs), thermal(kt)?);
    py.detach(|| tlfsim::oracle::oracle_coherence(&p, &specs, ctx, n_osc, &times))
        .map(|tr| tr.values)
        .map_err(to_py)
}

/// Switching fluctuator on resonance: `reduced_ode`, `lindblad`,
/// `weak_damped`, `strong_damped` or `slow_root`.
#[pyfunction]
#[pyo3(signature = (g, lambda_, gamma, times, method = "reduced_ode", strict = false))]
fn coherence_dissipative(
    py: Python<'_>,
    g: f64,
    lambda_: f64,
    gamma: f64,
    times: Vec<f64>,
    method: &str,
    strict: bool,
) -> PyResult<Vec<f64>> {
    let m = DissipativeMethod::from_tag(method).ok_or_else(|| unknown("dissipative", method))?;
    let tol = if strict { Tolerances::strict() } else { Tolerances::default() };
    py.detach(|| m.trace(g, lambda_, gamma, &times, tol)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (g, lambda_, gamma))]
fn slow_root(g: f64, lambda_: f64, gamma: f64) -> PyResult<f64> {
    slow_root_cubic(g, lambda_, gamma).map_err(to_py)
}

/// Regime name and damping, e.g. `("StrongIntermediate", None)`.
#[pyfunction]
#[pyo3(signature = (g, lambda_, gamma))]
fn classify_regime(g: f64, lambda_: f64, gamma: f64) -> (String, Option<String>) {
    let r = classify(g, lambda_, gamma);
    (format!("{:?}", r.kind), r.damping.map(|d| format!("{d:?}")))
}

#[pyfunction]
#[pyo3(signature = (tlfs, kt = None))]
fn ensemble_stats(tlfs: Vec<PyRef<'_, Tlf>>, kt: Option<f64>) -> PyResult<EnsembleStats> {
    let ens = TlfEnsemble::new(specs(&tlfs), thermal(kt)?);
    stats_of(&ens).map(EnsembleStats).map_err(to_py)
}

/// Exact sum over all `2^N` configurations.
#[pyfunction]
#[pyo3(signature = (params, tlfs, times, kt = None))]
fn coherence_ensemble_exact(
    py: Python<'_>,
    params: PyRef<'_, JcParams>,
    tlfs: Vec<PyRef<'_, Tlf>>,
    times: Vec<f64>,
    kt: Option<f64>,
) -> PyResult<Vec<f64>> {
    let p = params.0;
    let ens = TlfEnsemble::new(specs(&tlfs), thermal(kt)?);
    py.detach(|| exact_ensemble_trace(&p, &ens, &times)).map(|tr| tr.values).map_err(to_py)
}

/// Statistics-based ensemble laws: `continuum`, `narrow`, `broad_integral`,
/// `broad_erfc` or `broad_linear`.
#[pyfunction]
#[pyo3(signature = (params, stats, times, method = "continuum"))]
fn coherence_ensemble(
    params: PyRef<'_, JcParams>,
    stats: PyRef<'_, EnsembleStats>,
    times: Vec<f64>,
    method: &str,
) -> PyResult<Vec<f64>> {
    let m = EnsembleMethod::from_tag(method).ok_or_else(|| unknown("ensemble", method))?;
    times.iter().map(|&t| m.eval_stats(&params.0, &stats.0, t)).collect::<Result<_, _>>().map_err(to_py)
}

/// Monte-Carlo average of the coupling variance at temperature `kt`.
#[pyfunction]
#[pyo3(signature = (
    kt, samples = 100_000, seed = 0, d = 3, chi = 1.0, j0 = 1.0, r0 = 1.0, cos_theta = 1.0,
    p0 = 1.0, u_min = 1e-3, eps_max = 1.0, r_max = 100.0,
))]
#[allow(clippy::too_many_arguments)]
fn average_variance(
    py: Python<'_>,
    kt: f64,
    samples: usize,
    seed: u64,
    d: u32,
    chi: f64,
    j0: f64,
    r0: f64,
    cos_theta: f64,
    p0: f64,
    u_min: f64,
    eps_max: f64,
    r_max: f64,
) -> PyResult<McEstimate> {
    let mat = MaterialParams { chi, d, j0, r0, cos_theta };
    let domain = VarianceDomain { p0, u_min, eps_max, r_max };
    let est = py.detach(|| average_variance_mc(&mat, &domain, kt, samples, seed)).map_err(to_py)?;
    Ok(McEstimate {
        mean: est.mean,
        std_error: est.std_error,
        samples: est.samples,
        radial_remainder: est.radial_remainder,
    })
}

/// Validates and runs a `key = value` scenario; returns `(csv, manifest)`.
#[pyfunction]
fn run_config(py: Python<'_>, text: &str) -> PyResult<(String, String)> {
    let sc = validate_config(text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        PyValueError::new_err(lines.join("\n"))
    })?;
    let out = py.detach(|| run_scenario(&sc)).map_err(to_py)?;
    Ok((out.csv, out.manifest))
}

#[pymodule]
fn tlfsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<JcParams>()?;
    m.add_class::<Tlf>()?;
    m.add_class::<EnsembleStats>()?;
    m.add_class::<McEstimate>()?;
    m.add_function(wrap_pyfunction!(coherence_gr, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_single, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_dissipative, m)?)?;
    m.add_function(wrap_pyfunction!(slow_root, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_stats, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_ensemble_exact, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(average_variance, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
