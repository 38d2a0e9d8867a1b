//! Scenario configuration: a flat `key.path = value` format with a strict
//! schema, figure presets, and CSV plus manifest output.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dissipative::{
    classify_regime, regime_warnings, DissipativeMethod,
};
use crate::ensemble::{
    ensemble_stats, exact_ensemble_trace, sample_spatial_couplings, sample_uniform_couplings, EnsembleMethod,
    EnsembleStats, EpsilonRange, TlfEnsemble, DEFAULT_EXACT_CAP,
};
use crate::error::{Error, Result};
use crate::microscopic::{average_variance_mc, MaterialParams, VarianceDomain};
use crate::model::{coherence_gr, coherence_gr_short_time, JcParams, ThermalContext, TimeGrid, TlfSpec};
use crate::numerics::Tolerances;
use crate::oracle::oracle_coherence;
use crate::single::{weak_tlf_envelope, SingleMethod};

pub const DEFAULT_POINTS: usize = 1000;

/// One validation problem, tied to the config key (or line) at fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Key reference shown by `--help` and in the README.
pub const CONFIG_HELP: &str = "\
Config keys (one `key = value` per line, `#` starts a comment):
  kind               jc-only | single-tlf | dissipative | ensemble | continuum | micro | figure
  seed               u64 seed for sampled couplings and Monte-Carlo (default 0)
  methods            comma list of method tags (default: first tag of the kind)
  tolerance.profile  default | strict
  tGrid.tMax         final time (required except for micro and figure)
  tGrid.nPoints      grid points (default 1000)
  jc.omega0          oscillator frequency (default 1)
  jc.g               oscillator-TLS coupling (default 0.1)
  jc.delta           detuning epsilonT - omega0 (default 0)
  jc.epsilonT        TLS splitting; alternative to jc.delta
  tlf.epsilon        TLF splitting (default 0.1)
  tlf.lambda         TLS-TLF coupling (required for single-tlf, dissipative)
  tlf.gamma          TLF switching rate (required for dissipative)
  thermal.kT         temperature; absent or `inf` means the scale-separated limit
  ensemble.n         number of fluctuators (required)
  ensemble.sampler   uniform | spatial | explicit (default uniform)
  ensemble.halfWidth uniform coupling half width (default 0.05 g)
  ensemble.dim       spatial dimension, 2 or 3 (default 2)
  ensemble.boxMin    lower coordinate bound (default 1)
  ensemble.boxMax    upper coordinate bound (default 10)
  ensemble.w         spatial coupling scale (default 1)
  ensemble.epsMin    lower TLF splitting (default 0.01)
  ensemble.epsMax    upper TLF splitting (default 0.2)
  ensemble.lambdas   explicit coupling list (sampler = explicit)
  ensemble.epsilons  explicit splitting list (default 0.1 each)
  stats.mu           ensemble mean shift (default 0)
  stats.sigma        ensemble spread (required for continuum)
  micro.d            dimension, 2 or 3 (default 3)
  micro.j0 micro.r0 micro.chi micro.p0   material constants (default 1)
  micro.cosTheta     dipole orientation factor (default 1)
  micro.uMin         lower cutoff of u = (Delta0/eps)^2 (default 1e-3)
  micro.epsMax       upper splitting cutoff (default 1)
  micro.rMax         outer radius (default 100)
  micro.samples      Monte-Carlo samples per temperature (default 100000)
  micro.kT           comma list of temperatures (default 0.005,0.01,0.02,0.04)
  figure             preset number 1..7 (kind = figure)
  panel              a | b for figures 1, 2, 3, 6 and 7 (default a)
";

const KINDS: [&str; 7] = ["jc-only", "single-tlf", "dissipative", "ensemble", "continuum", "micro", "figure"];

const COMMON_KEYS: &[&str] = &["kind", "seed", "tolerance.profile"];
const GRID_KEYS: &[&str] = &["tGrid.tMax", "tGrid.nPoints"];
const JC_KEYS: &[&str] = &["jc.omega0", "jc.g", "jc.delta", "jc.epsilonT"];
const ENSEMBLE_KEYS: &[&str] = &[
    "ensemble.n",
    "ensemble.sampler",
    "ensemble.halfWidth",
    "ensemble.dim",
    "ensemble.boxMin",
    "ensemble.boxMax",
    "ensemble.w",
    "ensemble.epsMin",
    "ensemble.epsMax",
    "ensemble.lambdas",
    "ensemble.epsilons",
];
const MICRO_KEYS: &[&str] = &[
    "micro.d",
    "micro.j0",
    "micro.r0",
    "micro.chi",
    "micro.p0",
    "micro.cosTheta",
    "micro.uMin",
    "micro.epsMax",
    "micro.rMax",
    "micro.samples",
    "micro.kT",
];

fn kind_keys(kind: &str) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = COMMON_KEYS.to_vec();
    let extra: Vec<&[&'static str]> = match kind {
        "jc-only" => vec![GRID_KEYS, JC_KEYS, &["methods"]],
        "single-tlf" => vec![GRID_KEYS, JC_KEYS, &["methods", "tlf.epsilon", "tlf.lambda", "thermal.kT"]],
        "dissipative" => vec![GRID_KEYS, &["methods", "jc.g", "tlf.lambda", "tlf.gamma"]],
        "ensemble" => vec![GRID_KEYS, JC_KEYS, ENSEMBLE_KEYS, &["methods", "thermal.kT"]],
        "continuum" => vec![GRID_KEYS, JC_KEYS, &["methods", "stats.mu", "stats.sigma"]],
        "micro" => vec![MICRO_KEYS],
        "figure" => vec![GRID_KEYS, &["figure", "panel"]],
        _ => vec![],
    };
    for e in extra {
        keys.extend_from_slice(e);
    }
    keys
}

fn kind_methods(kind: &str) -> &'static [&'static str] {
    match kind {
        "jc-only" => &["gr", "gr_short_time"],
        "single-tlf" => &["exact", "weak_envelope", "strong_leading", "strong_higher", "oracle"],
        "dissipative" => &["reduced_ode", "lindblad", "weak_damped", "strong_damped", "slow_root"],
        "ensemble" => &["exact", "continuum", "narrow", "broad_integral", "broad_erfc", "broad_linear"],
        "continuum" => &["continuum", "narrow", "broad_integral", "broad_erfc", "broad_linear"],
        _ => &[],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Panel {
    A,
    B,
}

impl Panel {
    fn letter(self) -> &'static str {
        match self {
            Panel::A => "a",
            Panel::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    JcOnly,
    SingleTlf,
    Dissipative,
    EnsembleExact,
    Continuum,
    Microscopic,
    Figure { number: u8, panel: Panel },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::JcOnly => "jc-only",
            ScenarioKind::SingleTlf => "single-tlf",
            ScenarioKind::Dissipative => "dissipative",
            ScenarioKind::EnsembleExact => "ensemble",
            ScenarioKind::Continuum => "continuum",
            ScenarioKind::Microscopic => "micro",
            ScenarioKind::Figure { .. } => "figure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Uniform { half_width: f64 },
    Spatial { dim: usize, bounds: (f64, f64), w: f64 },
    Explicit { lambdas: Vec<f64>, epsilons: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub sampler: Sampler,
    pub eps: EpsilonRange,
}

impl EnsembleConfig {
    /// Draws the fluctuators from a generator seeded with `seed`.
    pub fn sample(&self, g: f64, seed: u64) -> Result<Vec<TlfSpec>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.sampler {
            Sampler::Uniform { half_width } => sample_uniform_couplings(self.n, *half_width, self.eps, &mut rng),
            Sampler::Spatial { dim, bounds, w } => {
                sample_spatial_couplings(self.n, *dim, *bounds, *w, g, self.eps, &mut rng)
            }
            Sampler::Explicit { lambdas, epsilons } => Ok(lambdas
                .iter()
                .zip(epsilons)
                .map(|(l, e)| TlfSpec::new(*e, *l))
                .collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroConfig {
    pub material: MaterialParams,
    pub domain: VarianceDomain,
    pub samples: usize,
    pub kts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceProfile {
    Default,
    Strict,
}

impl ToleranceProfile {
    pub fn ode(self) -> Tolerances {
        match self {
            ToleranceProfile::Default => Tolerances::default(),
            ToleranceProfile::Strict => Tolerances::strict(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ToleranceProfile::Default => "default",
            ToleranceProfile::Strict => "strict",
        }
    }
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub params: JcParams,
    /// Single fluctuator (also carries `gamma` for dissipative runs). For
    /// figure presets this is the first curve's fluctuator.
    pub tlf: TlfSpec,
    pub ctx: ThermalContext,
    pub ensemble: Option<EnsembleConfig>,
    pub stats: Option<EnsembleStats>,
    pub micro: Option<MicroConfig>,
    /// `None` for Monte-Carlo runs, whose abscissa is temperature.
    pub grid: Option<TimeGrid>,
    pub seed: u64,
    pub methods: Vec<String>,
    pub tolerance: ToleranceProfile,
    /// Every key with its value after defaults were applied.
    pub resolved: BTreeMap<String, String>,
}

/// Splits config text into a key map. Syntax errors and duplicate keys are
/// all reported.
pub fn parse_config(text: &str) -> std::result::Result<BTreeMap<String, String>, Vec<ConfigError>> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(ConfigError::new(format!("line {}", i + 1), "expected `key = value`"));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            errors.push(ConfigError::new(format!("line {}", i + 1), "empty key"));
        } else if map.insert(k.to_string(), v.to_string()).is_some() {
            errors.push(ConfigError::new(k, format!("duplicate key (line {})", i + 1)));
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

/// Parses and validates config text, collecting every error.
pub fn validate_config(text: &str) -> std::result::Result<Scenario, Vec<ConfigError>> {
    validate_map(&parse_config(text)?)
}

/// Validates an already split key map.
pub fn validate_map(map: &BTreeMap<String, String>) -> std::result::Result<Scenario, Vec<ConfigError>> {
    let mut r = Reader::new(map);
    let kind = match map.get("kind") {
        None => {
            r.err("kind", "missing required key");
            None
        }
        Some(k) if KINDS.contains(&k.as_str()) => Some(k.as_str()),
        Some(k) => {
            r.err("kind", format!("unknown kind `{k}`; expected one of {}", KINDS.join(", ")));
            None
        }
    };
    let all: Vec<&str> = KINDS.iter().flat_map(|k| kind_keys(k)).collect();
    for key in map.keys() {
        if !all.contains(&key.as_str()) {
            r.err(key, "unknown key");
        } else if let Some(kind) = kind {
            if !kind_keys(kind).contains(&key.as_str()) {
                r.err(key, format!("not used by kind `{kind}`"));
            }
        }
    }
    let Some(kind) = kind else {
        return Err(r.errors);
    };
    r.resolved.insert("kind".into(), kind.into());
    let built = match kind {
        "figure" => build_figure(&mut r),
        "micro" => build_micro(&mut r),
        _ => build_standard(&mut r, kind),
    };
    match built {
        Some(sc) if r.errors.is_empty() => Ok(Scenario { resolved: r.resolved, ..sc }),
        _ => {
            if r.errors.is_empty() {
                r.err("kind", "scenario could not be built");
            }
            Err(r.errors)
        }
    }
}

struct Reader<'a> {
    raw: &'a BTreeMap<String, String>,
    errors: Vec<ConfigError>,
    resolved: BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a BTreeMap<String, String>) -> Self {
        Self {
            raw,
            errors: Vec::new(),
            resolved: BTreeMap::new(),
        }
    }

    fn err(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(ConfigError::new(field, message));
    }

    fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    fn record(&mut self, key: &str, value: String) {
        self.resolved.insert(key.into(), value);
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        match self.raw.get(key) {
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => {
                    self.record(key, x.to_string());
                    Some(x)
                }
                _ => {
                    self.err(key, format!("expected a finite number, got `{v}`"));
                    None
                }
            },
            None => match default {
                Some(d) => {
                    self.record(key, d.to_string());
                    Some(d)
                }
                None => {
                    self.err(key, "missing required key");
                    None
                }
            },
        }
    }

    /// Number that must satisfy `ok`; `what` completes "must be ...".
    fn f64_where(&mut self, key: &str, default: Option<f64>, ok: fn(f64) -> bool, what: &str) -> Option<f64> {
        let x = self.f64(key, default)?;
        if ok(x) {
            Some(x)
        } else {
            self.err(key, format!("must be {what}, got {x}"));
            None
        }
    }

    fn positive(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.f64_where(key, default, |x| x > 0.0, "positive")
    }

    fn unsigned(&mut self, key: &str, default: Option<u64>) -> Option<u64> {
        match self.raw.get(key) {
            Some(v) => match v.parse::<u64>() {
                Ok(x) => {
                    self.record(key, x.to_string());
                    Some(x)
                }
                Err(_) => {
                    self.err(key, format!("expected a nonnegative integer, got `{v}`"));
                    None
                }
            },
            None => match default {
                Some(d) => {
                    self.record(key, d.to_string());
                    Some(d)
                }
                None => {
                    self.err(key, "missing required key");
                    None
                }
            },
        }
    }

    fn list(&mut self, key: &str, default: Option<&[f64]>) -> Option<Vec<f64>> {
        let values = match self.raw.get(key) {
            Some(v) => {
                let parsed: std::result::Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
                match parsed {
                    Ok(xs) if !xs.is_empty() && xs.iter().all(|x| x.is_finite()) => xs,
                    _ => {
                        self.err(key, format!("expected a comma list of finite numbers, got `{v}`"));
                        return None;
                    }
                }
            }
            None => match default {
                Some(d) => d.to_vec(),
                None => {
                    self.err(key, "missing required key");
                    return None;
                }
            },
        };
        let text = values.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        self.record(key, text);
        Some(values)
    }

    fn choice(&mut self, key: &str, options: &[&'static str], default: &'static str) -> Option<&'static str> {
        let v = self.raw.get(key).map(String::as_str).unwrap_or(default);
        match options.iter().find(|o| **o == v) {
            Some(o) => {
                self.record(key, (*o).into());
                Some(*o)
            }
            None => {
                self.err(key, format!("expected one of {}, got `{v}`", options.join(", ")));
                None
            }
        }
    }

    fn grid(&mut self, default_t_max: Option<f64>) -> Option<TimeGrid> {
        let t_max = self.positive("tGrid.tMax", default_t_max);
        let n = self.unsigned("tGrid.nPoints", Some(DEFAULT_POINTS as u64));
        if let Some(n) = n {
            if n < 2 {
                self.err("tGrid.nPoints", format!("must be at least 2, got {n}"));
                return None;
            }
        }
        TimeGrid::new(t_max?, n? as usize).ok()
    }

    fn jc(&mut self) -> Option<JcParams> {
        let omega0 = self.positive("jc.omega0", Some(1.0));
        let g = self.f64_where("jc.g", Some(0.1), |x| x >= 0.0, "nonnegative");
        let epsilon_t = if self.has("jc.epsilonT") {
            if self.has("jc.delta") {
                self.err("jc.delta", "conflicts with jc.epsilonT; give only one");
            }
            self.positive("jc.epsilonT", None)
        } else {
            let delta = self.f64("jc.delta", Some(0.0));
            match (omega0, delta) {
                (Some(w), Some(d)) => Some(w + d),
                _ => None,
            }
        };
        let (omega0, g, epsilon_t) = (omega0?, g?, epsilon_t?);
        if g == 0.0 && epsilon_t == omega0 {
            self.err("jc.g", "g = 0 at zero detuning leaves the Rabi doublet degenerate");
            return None;
        }
        match JcParams::new(omega0, epsilon_t, g) {
            Ok(p) => {
                self.record("jc.epsilonT", epsilon_t.to_string());
                self.record("jc.delta", p.detuning().to_string());
                Some(p)
            }
            Err(e) => {
                self.err("jc", e.to_string());
                None
            }
        }
    }

    fn thermal(&mut self) -> Option<ThermalContext> {
        let Some(v) = self.raw.get("thermal.kT") else {
            self.record("thermal.kT", "inf".into());
            return Some(ThermalContext::ScaleSeparated);
        };
        match v.parse::<f64>() {
            Ok(x) if x == f64::INFINITY => {
                self.record("thermal.kT", "inf".into());
                Some(ThermalContext::ScaleSeparated)
            }
            Ok(x) if x.is_finite() && x > 0.0 => {
                self.record("thermal.kT", x.to_string());
                Some(ThermalContext::FiniteTemperature { kt: x })
            }
            _ => {
                self.err("thermal.kT", format!("must be positive or `inf`, got `{v}`"));
                None
            }
        }
    }

    fn seed_and_profile(&mut self) -> (Option<u64>, Option<ToleranceProfile>) {
        let seed = self.unsigned("seed", Some(0));
        let profile = self
            .choice("tolerance.profile", &["default", "strict"], "default")
            .map(|p| if p == "strict" { ToleranceProfile::Strict } else { ToleranceProfile::Default });
        (seed, profile)
    }

    fn methods(&mut self, kind: &str) -> Option<Vec<String>> {
        let allowed = kind_methods(kind);
        let list: Vec<String> = match self.raw.get("methods") {
            Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
            None => vec![allowed[0].to_string()],
        };
        let mut ok = true;
        for (i, m) in list.iter().enumerate() {
            if !allowed.contains(&m.as_str()) {
                self.err(
                    "methods",
                    format!("tag `{m}` is not defined for kind `{kind}`; expected {}", allowed.join(", ")),
                );
                ok = false;
            } else if list[..i].contains(m) {
                self.err("methods", format!("tag `{m}` listed twice"));
                ok = false;
            }
        }
        self.record("methods", list.join(","));
        ok.then_some(list)
    }
}

fn empty_scenario(kind: ScenarioKind) -> Scenario {
    Scenario {
        kind,
        params: JcParams::resonant(0.1),
        tlf: TlfSpec::new(0.1, 0.0),
        ctx: ThermalContext::ScaleSeparated,
        ensemble: None,
        stats: None,
        micro: None,
        grid: None,
        seed: 0,
        methods: Vec::new(),
        tolerance: ToleranceProfile::Default,
        resolved: BTreeMap::new(),
    }
}

fn build_standard(r: &mut Reader, kind: &str) -> Option<Scenario> {
    let (seed, tolerance) = r.seed_and_profile();
    let grid = r.grid(None);
    let methods = r.methods(kind);
    let mut sc = match kind {
        "jc-only" => Scenario {
            params: r.jc()?,
            ..empty_scenario(ScenarioKind::JcOnly)
        },
        "single-tlf" => {
            let params = r.jc();
            let epsilon = r.f64_where("tlf.epsilon", Some(0.1), |x| x >= 0.0, "nonnegative");
            let lambda = r.f64("tlf.lambda", None);
            let ctx = r.thermal();
            Scenario {
                params: params?,
                tlf: TlfSpec::new(epsilon?, lambda?),
                ctx: ctx?,
                ..empty_scenario(ScenarioKind::SingleTlf)
            }
        }
        "dissipative" => {
            let g = r.f64_where("jc.g", Some(0.1), |x| x > 0.0, "positive");
            let lambda = r.f64("tlf.lambda", None);
            let gamma = r.f64_where("tlf.gamma", None, |x| x >= 0.0, "nonnegative");
            Scenario {
                params: JcParams::resonant(g?),
                tlf: TlfSpec::new(0.0, lambda?).with_gamma(gamma?),
                ..empty_scenario(ScenarioKind::Dissipative)
            }
        }
        "ensemble" => {
            let params = r.jc();
            let ctx = r.thermal();
            let ens = build_ensemble(r, params.map(|p| p.g), methods.as_deref());
            Scenario {
                params: params?,
                ctx: ctx?,
                ensemble: Some(ens?),
                ..empty_scenario(ScenarioKind::EnsembleExact)
            }
        }
        "continuum" => {
            let params = r.jc();
            let mu = r.f64("stats.mu", Some(0.0));
            let sigma = r.f64_where("stats.sigma", None, |x| x >= 0.0, "nonnegative");
            Scenario {
                params: params?,
                stats: Some(EnsembleStats::from_moments(mu?, sigma?).ok()?),
                ..empty_scenario(ScenarioKind::Continuum)
            }
        }
        _ => return None,
    };
    sc.grid = Some(grid?);
    sc.seed = seed?;
    sc.tolerance = tolerance?;
    sc.methods = methods?;
    Some(sc)
}

fn build_ensemble(r: &mut Reader, g: Option<f64>, methods: Option<&[String]>) -> Option<EnsembleConfig> {
    let n = r.unsigned("ensemble.n", None);
    let sampler = r.choice("ensemble.sampler", &["uniform", "spatial", "explicit"], "uniform");
    let eps_lo = r.f64_where("ensemble.epsMin", Some(0.01), |x| x >= 0.0, "nonnegative");
    let eps_hi = r.f64_where("ensemble.epsMax", Some(0.2), |x| x >= 0.0, "nonnegative");
    if let (Some(lo), Some(hi)) = (eps_lo, eps_hi) {
        if hi < lo {
            r.err("ensemble.epsMax", format!("must not be below ensemble.epsMin = {lo}"));
        }
    }
    let sampler_keys: &[&str] = match sampler? {
        "uniform" => &["ensemble.halfWidth"],
        "spatial" => &["ensemble.dim", "ensemble.boxMin", "ensemble.boxMax", "ensemble.w"],
        _ => &["ensemble.lambdas", "ensemble.epsilons"],
    };
    for key in ["ensemble.halfWidth", "ensemble.dim", "ensemble.boxMin", "ensemble.boxMax", "ensemble.w", "ensemble.lambdas", "ensemble.epsilons"] {
        if r.has(key) && !sampler_keys.contains(&key) {
            r.err(key, format!("not used by sampler `{}`", sampler?));
        }
    }
    let n = n? as usize;
    if n == 0 {
        r.err("ensemble.n", "must be at least 1");
        return None;
    }
    if methods.is_some_and(|m| m.iter().any(|t| t == "exact")) && n > DEFAULT_EXACT_CAP {
        r.err(
            "ensemble.n",
            format!("exact sum is capped at {DEFAULT_EXACT_CAP} fluctuators, got {n}; use the continuum methods"),
        );
    }
    let sampler = match sampler? {
        "uniform" => Sampler::Uniform {
            half_width: r.positive("ensemble.halfWidth", g.map(|g| 0.05 * g))?,
        },
        "spatial" => {
            let dim = r.unsigned("ensemble.dim", Some(2));
            let lo = r.positive("ensemble.boxMin", Some(1.0));
            let hi = r.positive("ensemble.boxMax", Some(10.0));
            let w = r.positive("ensemble.w", Some(1.0));
            if let Some(d) = dim {
                if d != 2 && d != 3 {
                    r.err("ensemble.dim", format!("must be 2 or 3, got {d}"));
                }
            }
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if hi <= lo {
                    r.err("ensemble.boxMax", format!("must exceed ensemble.boxMin = {lo}"));
                }
            }
            Sampler::Spatial {
                dim: dim? as usize,
                bounds: (lo?, hi?),
                w: w?,
            }
        }
        _ => {
            let lambdas = r.list("ensemble.lambdas", None)?;
            let default_eps = vec![0.1; lambdas.len()];
            let epsilons = r.list("ensemble.epsilons", Some(&default_eps))?;
            if lambdas.len() != n {
                r.err("ensemble.lambdas", format!("has {} entries but ensemble.n = {n}", lambdas.len()));
            }
            if epsilons.len() != lambdas.len() {
                r.err("ensemble.epsilons", format!("has {} entries but ensemble.lambdas has {}", epsilons.len(), lambdas.len()));
            }
            if epsilons.iter().any(|e| *e < 0.0) {
                r.err("ensemble.epsilons", "splittings must be nonnegative");
            }
            Sampler::Explicit { lambdas, epsilons }
        }
    };
    Some(EnsembleConfig {
        n,
        sampler,
        eps: EpsilonRange {
            lo: eps_lo?,
            hi: eps_hi?,
        },
    })
}

fn build_micro(r: &mut Reader) -> Option<Scenario> {
    let (seed, tolerance) = r.seed_and_profile();
    let d = r.unsigned("micro.d", Some(3));
    let j0 = r.positive("micro.j0", Some(1.0));
    let r0 = r.positive("micro.r0", Some(1.0));
    let chi = r.positive("micro.chi", Some(1.0));
    let p0 = r.positive("micro.p0", Some(1.0));
    let cos_theta = r.f64_where("micro.cosTheta", Some(1.0), |x| (0.0..=1.0).contains(&x), "in [0, 1]");
    let u_min = r.f64_where("micro.uMin", Some(1e-3), |x| x > 0.0 && x < 1.0, "in (0, 1)");
    let eps_max = r.positive("micro.epsMax", Some(1.0));
    let r_max = r.positive("micro.rMax", Some(100.0));
    let samples = r.unsigned("micro.samples", Some(100_000));
    let kts = r.list("micro.kT", Some(&[0.005, 0.01, 0.02, 0.04]));
    if let Some(d) = d {
        if d != 2 && d != 3 {
            r.err("micro.d", format!("must be 2 or 3, got {d}"));
        }
    }
    if let (Some(r0), Some(rm)) = (r0, r_max) {
        if rm <= r0 {
            r.err("micro.rMax", format!("must exceed micro.r0 = {r0}"));
        }
    }
    if let Some(s) = samples {
        if s < 10_000 {
            r.err("micro.samples", format!("must be at least 10000, got {s}"));
        }
    }
    if let Some(kts) = &kts {
        if kts.iter().any(|k| *k <= 0.0) {
            r.err("micro.kT", "temperatures must be positive");
        }
    }
    let material = MaterialParams {
        chi: chi?,
        d: d? as u32,
        j0: j0?,
        r0: r0?,
        cos_theta: cos_theta?,
    };
    let domain = VarianceDomain {
        p0: p0?,
        u_min: u_min?,
        eps_max: eps_max?,
        r_max: r_max?,
    };
    Some(Scenario {
        micro: Some(MicroConfig {
            material,
            domain,
            samples: samples? as usize,
            kts: kts?,
        }),
        seed: seed?,
        tolerance: tolerance?,
        ..empty_scenario(ScenarioKind::Microscopic)
    })
}

/// Parameters of each figure preset's first curve and its default `tMax`.
fn figure_defaults(number: u8, panel: Panel) -> (JcParams, TlfSpec, f64) {
    match (number, panel) {
        (1, _) => (JcParams::new(1.0, 1.01, 0.1).unwrap(), TlfSpec::new(0.1, 0.01), 2.0 * PI / 0.01),
        (2, Panel::A) => (JcParams::resonant(0.03), TlfSpec::new(0.1, 0.1), 2.0 * PI * 0.1 / (0.01 * 0.01)),
        (2, Panel::B) => (JcParams::resonant(0.03), TlfSpec::new(0.1, 0.1), 500.0),
        (3, Panel::A) => (JcParams::resonant(0.1), TlfSpec::new(0.0, 0.01).with_gamma(0.001), 3000.0),
        (3, Panel::B) => (JcParams::resonant(0.01), TlfSpec::new(0.0, 0.1).with_gamma(0.01), 6000.0),
        (4, _) => (JcParams::resonant(0.1), TlfSpec::new(0.1, 0.0), 600.0),
        (5, _) => (JcParams::resonant(0.1), TlfSpec::new(0.1, 0.0), 300.0),
        (6, Panel::A) => (JcParams::resonant(0.01), TlfSpec::new(0.1, 0.0), 2000.0),
        (6, Panel::B) => (JcParams::resonant(0.01), TlfSpec::new(0.1, 0.0), 3000.0),
        _ => (JcParams::resonant(0.01), TlfSpec::new(0.1, 0.0), 2000.0),
    }
}

fn build_figure(r: &mut Reader) -> Option<Scenario> {
    let (seed, tolerance) = r.seed_and_profile();
    let number = r.unsigned("figure", None);
    let panel = r.choice("panel", &["a", "b"], "a");
    let number = match number {
        Some(n @ 1..=7) => n as u8,
        Some(n) => {
            r.err("figure", format!("must be between 1 and 7, got {n}"));
            return None;
        }
        None => return None,
    };
    let panel = if panel? == "b" { Panel::B } else { Panel::A };
    if panel == Panel::B && matches!(number, 4 | 5) {
        r.err("panel", format!("figure {number} has a single preset; its sub-panels are separate columns"));
        return None;
    }
    let (params, tlf, t_max) = figure_defaults(number, panel);
    let grid = r.grid(Some(t_max))?;
    Some(Scenario {
        kind: ScenarioKind::Figure { number, panel },
        params,
        tlf,
        grid: Some(grid),
        seed: seed?,
        tolerance: tolerance?,
        ..empty_scenario(ScenarioKind::JcOnly)
    })
}

/// CSV document and manifest of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub csv: String,
    pub manifest: String,
}

#[derive(Default)]
struct Table {
    x_name: &'static str,
    x: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
    /// Extra manifest lines.
    info: Vec<(String, String)>,
    notes: Vec<String>,
    warnings: Vec<String>,
}

impl Table {
    fn over(x_name: &'static str, x: Vec<f64>) -> Self {
        Self {
            x_name,
            x,
            ..Default::default()
        }
    }

    fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.x.len());
        self.columns.push((name.into(), values));
    }

    fn info(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.info.push((key.into(), value.to_string()));
    }
}

/// Runs a validated scenario.
pub fn run_scenario(sc: &Scenario) -> Result<RunOutput> {
    let table = match sc.kind {
        ScenarioKind::JcOnly => run_jc(sc),
        ScenarioKind::SingleTlf => run_single(sc),
        ScenarioKind::Dissipative => run_dissipative(sc),
        ScenarioKind::EnsembleExact => run_ensemble(sc),
        ScenarioKind::Continuum => run_continuum(sc),
        ScenarioKind::Microscopic => run_micro(sc),
        ScenarioKind::Figure { number, panel } => run_figure(sc, number, panel),
    }
    .map_err(|e| e.context(format!("{} run", sc.kind.name())))?;
    Ok(RunOutput {
        csv: write_csv(&table),
        manifest: write_manifest(sc, &table),
    })
}

fn write_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(table.x_name);
    for (name, _) in &table.columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, x) in table.x.iter().enumerate() {
        let _ = write!(out, "{x:.16e}");
        for (_, col) in &table.columns {
            let _ = write!(out, ",{:.16e}", col[i]);
        }
        out.push('\n');
    }
    out
}

fn write_manifest(sc: &Scenario, table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tlfsim run manifest");
    let _ = writeln!(out, "version = tlfsim {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in &sc.resolved {
        let _ = writeln!(out, "{k} = {v}");
    }
    let ode = sc.tolerance.ode();
    let _ = writeln!(out, "tolerance.ode.rel = {:e}", ode.rel);
    let _ = writeln!(out, "tolerance.ode.abs = {:e}", ode.abs);
    let _ = writeln!(out, "tolerance.quad.rel = 1e-8");
    let _ = writeln!(out, "tolerance.quad.abs = 1e-12");
    let cols: Vec<&str> = std::iter::once(table.x_name)
        .chain(table.columns.iter().map(|c| c.0.as_str()))
        .collect();
    let _ = writeln!(out, "columns = {}", cols.join(","));
    for (k, v) in &table.info {
        let _ = writeln!(out, "{k} = {v}");
    }
    for n in &table.notes {
        let _ = writeln!(out, "note = {n}");
    }
    for w in &table.warnings {
        let _ = writeln!(out, "warning = {w}");
    }
    out
}

fn grid_points(sc: &Scenario) -> Vec<f64> {
    sc.grid.map(|g| g.points()).unwrap_or_default()
}

fn values<F: FnMut(f64) -> Result<f64>>(grid: &[f64], f: F) -> Result<Vec<f64>> {
    grid.iter().copied().map(f).collect()
}

fn run_jc(sc: &Scenario) -> Result<Table> {
    let grid = grid_points(sc);
    let mut table = Table::over("t", grid.clone());
    for m in &sc.methods {
        let col = match m.as_str() {
            "gr" => values(&grid, |t| coherence_gr(&sc.params, t))?,
            _ => grid.iter().map(|t| coherence_gr_short_time(sc.params.g, *t)).collect(),
        };
        table.push(m.clone(), col);
    }
    Ok(table)
}

fn single_column(
    table: &mut Table,
    method: &str,
    params: &JcParams,
    tlf: &TlfSpec,
    ctx: ThermalContext,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if method == "oracle" {
        return Ok(oracle_coherence(params, std::slice::from_ref(tlf), ctx, 2, grid)?.values);
    }
    let m = SingleMethod::from_tag(method).ok_or_else(|| Error::InvalidInput(format!("unknown tag {method}")))?;
    let (trace, warnings) = m.trace(params, tlf, ctx, grid).map_err(|e| e.context(method.to_string()))?;
    table.warnings.extend(warnings.into_iter().map(|w| format!("{method}: {w}")));
    Ok(trace.values)
}

fn run_single(sc: &Scenario) -> Result<Table> {
    let grid = grid_points(sc);
    let mut table = Table::over("t", grid.clone());
    for m in &sc.methods {
        let col = single_column(&mut table, m, &sc.params, &sc.tlf, sc.ctx, &grid)?;
        table.push(m.clone(), col);
    }
    Ok(table)
}

fn dissipative_column(table: &mut Table, method: &str, g: f64, lambda: f64, gamma: f64, grid: &[f64], tol: Tolerances) -> Result<Vec<f64>> {
    let m = DissipativeMethod::from_tag(method).ok_or_else(|| Error::InvalidInput(format!("unknown tag {method}")))?;
    table.warnings.extend(regime_warnings(m, g, lambda, gamma).into_iter().map(|w| format!("{method}: {w}")));
    m.trace(g, lambda, gamma, grid, tol)
}

fn run_dissipative(sc: &Scenario) -> Result<Table> {
    let grid = grid_points(sc);
    let mut table = Table::over("t", grid.clone());
    let gamma = sc.tlf.gamma.unwrap_or(0.0);
    table.info("regime", format!("{:?}", classify_regime(sc.params.g, sc.tlf.lambda, gamma)));
    for m in &sc.methods {
        let col = dissipative_column(&mut table, m, sc.params.g, sc.tlf.lambda, gamma, &grid, sc.tolerance.ode())
            .map_err(|e| e.context(m.clone()))?;
        table.push(m.clone(), col);
    }
    Ok(table)
}

fn ensemble_column(
    table: &mut Table,
    method: &str,
    params: &JcParams,
    ens: &TlfEnsemble,
    stats: &EnsembleStats,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let m = EnsembleMethod::from_tag(method).ok_or_else(|| Error::InvalidInput(format!("unknown tag {method}")))?;
    if m == EnsembleMethod::Exact {
        return Ok(exact_ensemble_trace(params, ens, grid)?.values);
    }
    let (trace, warnings) = m.stats_trace(params, stats, grid).map_err(|e| e.context(method.to_string()))?;
    table.warnings.extend(warnings.into_iter().map(|w| format!("{method}: {w}")));
    Ok(trace.values)
}

fn describe_ensemble(table: &mut Table, prefix: &str, g: f64, tlfs: &[TlfSpec], stats: &EnsembleStats) {
    let lambdas: Vec<String> = tlfs.iter().map(|t| t.lambda.to_string()).collect();
    let eps: Vec<String> = tlfs.iter().map(|t| t.epsilon.to_string()).collect();
    table.info(format!("{prefix}lambdas"), lambdas.join(","));
    table.info(format!("{prefix}epsilons"), eps.join(","));
    table.info(format!("{prefix}mu"), stats.mu);
    table.info(format!("{prefix}sigma"), stats.sigma());
    table.info(format!("{prefix}sigma_over_g"), stats.sigma() / g);
    if let Some(r) = stats.r {
        table.info(format!("{prefix}R"), r);
    }
}

fn run_ensemble(sc: &Scenario) -> Result<Table> {
    let grid = grid_points(sc);
    let mut table = Table::over("t", grid.clone());
    let cfg = sc.ensemble.as_ref().ok_or_else(|| Error::InvalidInput("missing ensemble".into()))?;
    let tlfs = cfg.sample(sc.params.g, sc.seed)?;
    let ens = TlfEnsemble::new(tlfs, sc.ctx);
    let stats = ensemble_stats(&ens)?;
    describe_ensemble(&mut table, "sample.", sc.params.g, &ens.tlfs, &stats);
    for m in &sc.methods {
        let col = ensemble_column(&mut table, m, &sc.params, &ens, &stats, &grid)?;
        table.push(m.clone(), col);
    }
    Ok(table)
}

fn run_continuum(sc: &Scenario) -> Result<Table> {
    let grid = grid_points(sc);
    let mut table = Table::over("t", grid.clone());
    let stats = sc.stats.ok_or_else(|| Error::InvalidInput("missing statistics".into()))?;
    let ens = TlfEnsemble::new(Vec::new(), ThermalContext::ScaleSeparated);
    for m in &sc.methods {
        let col = ensemble_column(&mut table, m, &sc.params, &ens, &stats, &grid)?;
        table.push(m.clone(), col);
    }
    Ok(table)
}

fn run_micro(sc: &Scenario) -> Result<Table> {
    let cfg = sc.micro.as_ref().ok_or_else(|| Error::InvalidInput("missing micro block".into()))?;
    let mut table = Table::over("kT", cfg.kts.clone());
    let mut est = Vec::new();
    for &kt in &cfg.kts {
        est.push(average_variance_mc(&cfg.material, &cfg.domain, kt, cfg.samples, sc.seed)?);
    }
    table.push("variance", est.iter().map(|e| e.mean).collect());
    table.push("std_error", est.iter().map(|e| e.std_error).collect());
    table.push("radial_remainder", est.iter().map(|e| e.radial_remainder).collect());
    table.notes.push("variance excludes the analytic r > rMax remainder, reported separately".into());
    Ok(table)
}

fn gaussian(stats: &EnsembleStats, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|t| (-0.5 * stats.sigma2 * t * t).exp()).collect()
}

fn run_figure(sc: &Scenario, number: u8, panel: Panel) -> Result<Table> {
    let grid = grid_points(sc);
    let mut table = Table::over("t", grid.clone());
    let ss = ThermalContext::ScaleSeparated;
    table.info("figure.panel", format!("{number}{}", panel.letter()));
    table.notes.push("tMax is a preset default unless overridden".into());
    let tol = sc.tolerance.ode();
    match (number, panel) {
        (1, Panel::A) => {
            for m in ["exact", "weak_envelope"] {
                let col = single_column(&mut table, m, &sc.params, &sc.tlf, ss, &grid)?;
                table.push(m, col);
            }
        }
        (1, Panel::B) => {
            table.notes.push("temperatures kT/epsilon = inf, 2, 1, 0.5 are preset defaults".into());
            for ratio in [f64::INFINITY, 2.0, 1.0, 0.5] {
                let ctx = if ratio.is_finite() {
                    ThermalContext::FiniteTemperature { kt: ratio * sc.tlf.epsilon }
                } else {
                    ss
                };
                let col = values(&grid, |t| weak_tlf_envelope(&sc.tlf, ctx, t))?;
                table.push(format!("tlf_envelope_kT_over_eps_{ratio}"), col);
            }
        }
        (2, _) => {
            let approx = if panel == Panel::A { "strong_leading" } else { "strong_higher" };
            for ratio in [0.3, 0.2, 0.1] {
                let params = JcParams::resonant(ratio * sc.tlf.lambda);
                for m in ["exact", approx] {
                    let col = single_column(&mut table, m, &params, &sc.tlf, ss, &grid)?;
                    table.push(format!("{m}_g_over_lambda_{ratio}"), col);
                }
            }
        }
        (3, _) => {
            table.notes.push("gamma/lambda = 0.1, 1, 10 are preset defaults".into());
            table.notes.push("master-equation curves use the reduced equations, which match the Lindblad oracle".into());
            let approx = if panel == Panel::A { "weak_damped" } else { "strong_damped" };
            let (g, lambda) = (sc.params.g, sc.tlf.lambda);
            for ratio in [0.1, 1.0, 10.0] {
                let gamma = ratio * lambda;
                for m in ["reduced_ode", approx] {
                    let col = dissipative_column(&mut table, m, g, lambda, gamma, &grid, tol)?;
                    table.push(format!("{m}_gamma_over_lambda_{ratio}"), col);
                }
            }
        }
        (4, _) => {
            table.notes.push("couplings are sampled from the preset seed, so sigma/g varies between samples".into());
            table.notes.push("TLF splittings are drawn from the default range; they do not enter in the scale-separated limit".into());
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            for n in [5usize, 10, 15] {
                let tlfs = sample_uniform_couplings(n, 0.05 * sc.params.g, EpsilonRange::default(), &mut rng)?;
                figure_ensemble_columns(&mut table, &sc.params, tlfs, &format!("n_{n}"), &grid)?;
            }
        }
        (5, _) => {
            table.notes.push("three spatial samples share one generator seeded with the preset seed".into());
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            for s in 1..=3 {
                let tlfs =
                    sample_spatial_couplings(15, 2, (1.0, 10.0), 1.0, sc.params.g, EpsilonRange::default(), &mut rng)?;
                figure_ensemble_columns(&mut table, &sc.params, tlfs, &format!("sample_{s}"), &grid)?;
            }
        }
        (6, _) => {
            let (n, w) = if panel == Panel::A { (5usize, 200.0) } else { (15, 50.0) };
            let g = sc.params.g;
            table.notes.push("the broad-ensemble curve uses the sigma of the uniform coupling distribution".into());
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
            let uniform = sample_uniform_couplings(n, 5.0 * g, EpsilonRange::default(), &mut rng)?;
            figure_exact_only(&mut table, &sc.params, uniform, "uniform", &grid)?;
            for s in 1..=3 {
                let tlfs = sample_spatial_couplings(n, 2, (1.0, 10.0), w, g, EpsilonRange::default(), &mut rng)?;
                figure_exact_only(&mut table, &sc.params, tlfs, &format!("spatial_{s}"), &grid)?;
            }
            let stats = EnsembleStats::from_moments(0.0, 5.0 * g * (n as f64 / 3.0).sqrt())?;
            table.info("broad.sigma", stats.sigma());
            let col = EnsembleMethod::BroadIntegral.stats_trace(&sc.params, &stats, &grid)?.0.values;
            table.push("broad_integral", col);
        }
        _ => {
            let g = sc.params.g;
            let sigma = 10.0 * g;
            table.notes.push("sigma = 10 g is a preset default".into());
            table.info("stats.sigma", sigma);
            if panel == Panel::A {
                let stats = EnsembleStats::from_moments(0.0, sigma)?;
                for m in [EnsembleMethod::Continuum, EnsembleMethod::BroadErfc, EnsembleMethod::BroadLinear] {
                    let col = ensemble_column(&mut table, m.tag(), &sc.params, &TlfEnsemble::new(Vec::new(), ss), &stats, &grid)?;
                    table.push(m.tag(), col);
                }
            } else {
                table.notes.push("mu/sigma = 0, 0.5, 1, 2 are preset defaults".into());
                for ratio in [0.0, 0.5, 1.0, 2.0] {
                    let stats = EnsembleStats::from_moments(ratio * sigma, sigma)?;
                    let col = EnsembleMethod::Continuum.stats_trace(&sc.params, &stats, &grid)?.0.values;
                    table.push(format!("continuum_mu_over_sigma_{ratio}"), col);
                }
            }
        }
    }
    Ok(table)
}

fn figure_ensemble_columns(table: &mut Table, params: &JcParams, tlfs: Vec<TlfSpec>, label: &str, grid: &[f64]) -> Result<()> {
    let ens = TlfEnsemble::new(tlfs, ThermalContext::ScaleSeparated);
    let stats = ensemble_stats(&ens)?;
    describe_ensemble(table, &format!("{label}."), params.g, &ens.tlfs, &stats);
    let exact = exact_ensemble_trace(params, &ens, grid)?.values;
    table.push(format!("exact_{label}"), exact);
    let narrow = ensemble_column(table, "narrow", params, &ens, &stats, grid)?;
    table.push(format!("narrow_{label}"), narrow);
    table.push(format!("gaussian_envelope_{label}"), gaussian(&stats, grid));
    Ok(())
}

fn figure_exact_only(table: &mut Table, params: &JcParams, tlfs: Vec<TlfSpec>, label: &str, grid: &[f64]) -> Result<()> {
    let ens = TlfEnsemble::new(tlfs, ThermalContext::ScaleSeparated);
    let stats = ensemble_stats(&ens)?;
    describe_ensemble(table, &format!("{label}."), params.g, &ens.tlfs, &stats);
    table.push(format!("exact_{label}"), exact_ensemble_trace(params, &ens, grid)?.values);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(errs: &[ConfigError]) -> Vec<&str> {
        errs.iter().map(|e| e.field.as_str()).collect()
    }

    #[test]
    fn missing_t_max_is_named() {
        let errs = validate_config("kind = jc-only\njc.g = 0.1\n").unwrap_err();
        assert_eq!(fields(&errs), vec!["tGrid.tMax"]);
    }

    #[test]
    fn negative_g_is_rejected() {
        let errs = validate_config("kind = jc-only\njc.g = -0.1\ntGrid.tMax = 10\n").unwrap_err();
        assert!(fields(&errs).contains(&"jc.g"));
    }

    #[test]
    fn errors_are_collected() {
        let text = "kind = single-tlf\njc.g = -1\nbogus = 3\nstats.mu = 0\ntGrid.nPoints = 1\nmethods = exact,nope\n";
        let errs = validate_config(text).unwrap_err();
        let f = fields(&errs);
        for key in ["jc.g", "bogus", "stats.mu", "tGrid.nPoints", "tGrid.tMax", "methods", "tlf.lambda"] {
            assert!(f.contains(&key), "{key} missing from {f:?}");
        }
    }

    #[test]
    fn syntax_and_duplicates() {
        let errs = parse_config("kind = jc-only\nnonsense\nkind = micro\n").unwrap_err();
        assert_eq!(fields(&errs), vec!["line 2", "kind"]);
    }

    #[test]
    fn figure_3b_preset() {
        let sc = validate_config("kind = figure\nfigure = 3\npanel = b\n").unwrap();
        assert_eq!(sc.kind, ScenarioKind::Figure { number: 3, panel: Panel::B });
        assert_eq!(sc.params.g, 0.01);
        assert_eq!(sc.tlf.lambda, 0.1);
        assert_eq!(sc.params.detuning(), 0.0);
    }

    #[test]
    fn figure_rejects_physics_keys() {
        let errs = validate_config("kind = figure\nfigure = 1\njc.g = 0.2\n").unwrap_err();
        assert_eq!(fields(&errs), vec!["jc.g"]);
        assert!(validate_config("kind = figure\nfigure = 9\n").is_err());
        assert!(validate_config("kind = figure\nfigure = 4\npanel = b\n").is_err());
    }

    #[test]
    fn jc_only_gr_column() {
        let sc = validate_config("kind = jc-only\njc.g = 0.1\njc.delta = 0\ntGrid.tMax = 50\ntGrid.nPoints = 11\n").unwrap();
        let out = run_scenario(&sc).unwrap();
        let mut lines = out.csv.lines();
        assert_eq!(lines.next(), Some("t,gr"));
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert!((v[1] - (0.1 * v[0]).cos().abs()).abs() < 1e-15);
        }
        assert!(out.manifest.contains("jc.g = 0.1"));
    }

    #[test]
    fn ensemble_is_deterministic() {
        let text = "kind = ensemble\nensemble.n = 4\nseed = 7\ntGrid.tMax = 100\ntGrid.nPoints = 50\nmethods = exact,narrow\n";
        let a = run_scenario(&validate_config(text).unwrap()).unwrap();
        let b = run_scenario(&validate_config(text).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = run_scenario(&validate_config(&text.replace("seed = 7", "seed = 8")).unwrap()).unwrap();
        assert_ne!(a.csv, other.csv);
    }

    #[test]
    fn exact_cap_is_validated() {
        let errs = validate_config("kind = ensemble\nensemble.n = 40\ntGrid.tMax = 1\n").unwrap_err();
        assert_eq!(fields(&errs), vec!["ensemble.n"]);
        assert!(validate_config("kind = ensemble\nensemble.n = 40\ntGrid.tMax = 1\nmethods = narrow\n").is_ok());
    }

    #[test]
    fn explicit_sampler_lengths() {
        let ok = "kind = ensemble\nensemble.n = 2\nensemble.sampler = explicit\nensemble.lambdas = 0.01,-0.02\ntGrid.tMax = 1\n";
        assert!(validate_config(ok).is_ok());
        let errs = validate_config(&ok.replace("ensemble.n = 2", "ensemble.n = 3")).unwrap_err();
        assert_eq!(fields(&errs), vec!["ensemble.lambdas"]);
        let errs = validate_config(&format!("{ok}ensemble.halfWidth = 0.1\n")).unwrap_err();
        assert_eq!(fields(&errs), vec!["ensemble.halfWidth"]);
    }

    #[test]
    fn delta_and_epsilon_t_conflict() {
        let errs = validate_config("kind = jc-only\njc.delta = 0.1\njc.epsilonT = 1.1\ntGrid.tMax = 1\n").unwrap_err();
        assert_eq!(fields(&errs), vec!["jc.delta"]);
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        let sc = validate_config("kind = jc-only\ntGrid.tMax = 1\ntGrid.nPoints = 3\n").unwrap();
        let csv = run_scenario(&sc).unwrap().csv;
        let row = csv.lines().nth(2).unwrap();
        assert_eq!(row.split(',').next().unwrap(), "5.0000000000000000e-1");
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }
}
