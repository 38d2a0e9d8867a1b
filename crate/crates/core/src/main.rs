use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use tlfsim::scenario::{parse_config, run_scenario, validate_map, ConfigError, CONFIG_HELP};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Oscillator coherence under a two-level system dephased by thermal
/// two-level fluctuators. Writes CSV traces and a run manifest.
#[derive(Parser)]
#[command(name = "tlfsim", version, after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Common {
    /// Config file (`key = value` lines); flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for sampled couplings and Monte-Carlo [default: 0]
    #[arg(long)]
    seed: Option<String>,
    /// CSV path; the manifest goes to `<out>.manifest.txt`. Without it the
    /// CSV is written to stdout and no manifest is written
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final time. Without --config a per-command default applies
    #[arg(long)]
    t_max: Option<String>,
    /// Number of grid points [default: 1000]
    #[arg(long)]
    n_points: Option<String>,
    /// Comma list of method tags
    #[arg(long)]
    methods: Option<String>,
    /// ODE tolerance profile: default | strict
    #[arg(long)]
    tolerance_profile: Option<String>,
}

#[derive(Args, Default)]
struct Jc {
    /// Oscillator-TLS coupling [default: 0.1]
    #[arg(long)]
    g: Option<String>,
    /// Detuning epsilonT - omega0 [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Oscillator frequency [default: 1]
    #[arg(long)]
    omega0: Option<String>,
    /// TLS splitting (instead of --delta)
    #[arg(long)]
    epsilon_t: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bare Rabi coherence without fluctuators (default tMax 200)
    JcOnly {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jc: Jc,
    },
    /// One frozen fluctuator (default tMax 1000)
    SingleTlf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jc: Jc,
        /// TLF splitting [default: 0.1]
        #[arg(long)]
        epsilon: Option<String>,
        /// TLS-TLF coupling
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// Temperature; omit for the scale-separated limit
        #[arg(long)]
        kt: Option<String>,
    },
    /// One switching fluctuator at resonance (default tMax 2000)
    Dissipative {
        #[command(flatten)]
        common: Common,
        /// Oscillator-TLS coupling [default: 0.1]
        #[arg(long)]
        g: Option<String>,
        /// TLS-TLF coupling
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
        /// TLF switching rate
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Sampled ensemble of frozen fluctuators (default tMax 500)
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jc: Jc,
        /// Number of fluctuators
        #[arg(long)]
        n: Option<String>,
        /// uniform | spatial | explicit [default: uniform]
        #[arg(long)]
        sampler: Option<String>,
        /// Uniform coupling half width [default: 0.05 g]
        #[arg(long)]
        half_width: Option<String>,
        /// Spatial dimension [default: 2]
        #[arg(long)]
        dim: Option<String>,
        /// Spatial coupling scale [default: 1]
        #[arg(long)]
        w: Option<String>,
        /// Lower coordinate bound [default: 1]
        #[arg(long)]
        box_min: Option<String>,
        /// Upper coordinate bound [default: 10]
        #[arg(long)]
        box_max: Option<String>,
        /// Explicit coupling list
        #[arg(long, allow_hyphen_values = true)]
        lambdas: Option<String>,
        /// Explicit splitting list
        #[arg(long)]
        epsilons: Option<String>,
        /// Temperature; omit for the scale-separated limit
        #[arg(long)]
        kt: Option<String>,
    },
    /// Gaussian continuum limit from given statistics (default tMax 500)
    Continuum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        jc: Jc,
        /// Mean shift [default: 0]
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        /// Spread
        #[arg(long)]
        sigma: Option<String>,
    },
    /// Monte-Carlo variance of the coupling distribution versus temperature
    Micro {
        #[command(flatten)]
        common: Common,
        /// Dimension, 2 or 3 [default: 3]
        #[arg(long)]
        d: Option<String>,
        /// Orientation factor [default: 1]
        #[arg(long)]
        cos_theta: Option<String>,
        /// Samples per temperature [default: 100000]
        #[arg(long)]
        samples: Option<String>,
        /// Comma list of temperatures
        #[arg(long)]
        kt: Option<String>,
    },
    /// Figure preset 1..7
    Figure {
        number: String,
        /// a | b for figures 1, 2, 3, 6 and 7 [default: a]
        #[arg(long)]
        panel: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Validate a config file and list every problem
    Validate {
        path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Io(String),
    Validation(Vec<ConfigError>),
    Numerical(tlfsim::Error),
}

impl Failure {
    fn report(&self) -> u8 {
        match self {
            Failure::Io(msg) => {
                eprintln!("error: {msg}");
                EXIT_IO
            }
            Failure::Validation(errs) => {
                for e in errs {
                    eprintln!("config error: {e}");
                }
                EXIT_VALIDATION
            }
            Failure::Numerical(e) => {
                eprintln!("numerical error: {e}");
                EXIT_NUMERICAL
            }
        }
    }
}

type Pairs = Vec<(&'static str, Option<String>)>;

impl Common {
    fn pairs(&self) -> Pairs {
        vec![
            ("seed", self.seed.clone()),
            ("tGrid.tMax", self.t_max.clone()),
            ("tGrid.nPoints", self.n_points.clone()),
            ("methods", self.methods.clone()),
            ("tolerance.profile", self.tolerance_profile.clone()),
        ]
    }
}

impl Jc {
    fn pairs(&self) -> Pairs {
        vec![
            ("jc.g", self.g.clone()),
            ("jc.delta", self.delta.clone()),
            ("jc.omega0", self.omega0.clone()),
            ("jc.epsilonT", self.epsilon_t.clone()),
        ]
    }
}

/// Kind name, default tMax and flag-derived keys of a run subcommand.
fn describe(cmd: Cmd) -> (&'static str, Option<&'static str>, Common, Pairs) {
    match cmd {
        Cmd::JcOnly { common, jc } => ("jc-only", Some("200"), common, jc.pairs()),
        Cmd::SingleTlf {
            common,
            jc,
            epsilon,
            lambda,
            kt,
        } => {
            let mut p = jc.pairs();
            p.extend([("tlf.epsilon", epsilon), ("tlf.lambda", lambda), ("thermal.kT", kt)]);
            ("single-tlf", Some("1000"), common, p)
        }
        Cmd::Dissipative { common, g, lambda, gamma } => (
            "dissipative",
            Some("2000"),
            common,
            vec![("jc.g", g), ("tlf.lambda", lambda), ("tlf.gamma", gamma)],
        ),
        Cmd::Ensemble {
            common,
            jc,
            n,
            sampler,
            half_width,
            dim,
            w,
            box_min,
            box_max,
            lambdas,
            epsilons,
            kt,
        } => {
            let mut p = jc.pairs();
            p.extend([
                ("ensemble.n", n),
                ("ensemble.sampler", sampler),
                ("ensemble.halfWidth", half_width),
                ("ensemble.dim", dim),
                ("ensemble.w", w),
                ("ensemble.boxMin", box_min),
                ("ensemble.boxMax", box_max),
                ("ensemble.lambdas", lambdas),
                ("ensemble.epsilons", epsilons),
                ("thermal.kT", kt),
            ]);
            ("ensemble", Some("500"), common, p)
        }
        Cmd::Continuum { common, jc, mu, sigma } => {
            let mut p = jc.pairs();
            p.extend([("stats.mu", mu), ("stats.sigma", sigma)]);
            ("continuum", Some("500"), common, p)
        }
        Cmd::Micro {
            common,
            d,
            cos_theta,
            samples,
            kt,
        } => (
            "micro",
            None,
            common,
            vec![("micro.d", d), ("micro.cosTheta", cos_theta), ("micro.samples", samples), ("micro.kT", kt)],
        ),
        Cmd::Figure { number, panel, common } => {
            ("figure", None, common, vec![("figure", Some(number)), ("panel", panel)])
        }
        Cmd::Validate { .. } => unreachable!("validate is handled separately"),
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(Failure::Validation)
}

fn validate(path: Option<PathBuf>, config: Option<PathBuf>) -> Result<(), Failure> {
    let path = path.or(config).ok_or_else(|| {
        Failure::Validation(vec![ConfigError {
            field: "config".into(),
            message: "no config file given".into(),
        }])
    })?;
    let sc = validate_map(&read_config(&path)?).map_err(Failure::Validation)?;
    println!("valid {} scenario", sc.kind.name());
    for (k, v) in &sc.resolved {
        println!("{k} = {v}");
    }
    Ok(())
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    if let Cmd::Validate { path, config } = cmd {
        return validate(path, config);
    }
    let (kind, default_t_max, common, physics) = describe(cmd);
    let mut map = match &common.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    if let Some(k) = map.get("kind") {
        if k != kind {
            return Err(Failure::Validation(vec![ConfigError {
                field: "kind".into(),
                message: format!("config declares `{k}` but the subcommand is `{kind}`"),
            }]));
        }
    }
    map.insert("kind".into(), kind.into());
    for (key, value) in common.pairs().into_iter().chain(physics) {
        if let Some(v) = value {
            map.insert(key.into(), v);
        }
    }
    if common.config.is_none() && !map.contains_key("tGrid.tMax") {
        if let Some(t) = default_t_max {
            map.insert("tGrid.tMax".into(), t.into());
        }
    }
    let sc = validate_map(&map).map_err(Failure::Validation)?;
    info!("running {} scenario", sc.kind.name());
    let out = run_scenario(&sc).map_err(Failure::Numerical)?;
    match &common.out {
        Some(path) => {
            fs::write(path, &out.csv).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            let mut manifest = path.clone().into_os_string();
            manifest.push(".manifest.txt");
            let manifest = PathBuf::from(manifest);
            fs::write(&manifest, &out.manifest)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", manifest.display())))?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            match stdout.write_all(out.csv.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(Failure::Io(format!("cannot write stdout: {e}"))),
                _ => {}
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("TLFSIM_THREADS") else {
        return Ok(());
    };
    let n = v.parse::<usize>().ok().filter(|n| *n >= 1).ok_or_else(|| {
        Failure::Validation(vec![ConfigError {
            field: "TLFSIM_THREADS".into(),
            message: format!("expected a positive integer, got `{v}`"),
        }])
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Io(format!("cannot build thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli.cmd)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => ExitCode::from(f.report()),
    }
}
