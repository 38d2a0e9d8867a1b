use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Generalized Rabi frequency vanished (g = 0 and zero effective detuning).
    #[error("degenerate JC eigensystem{}: g = 0 and effective detuning = 0", branch_suffix(.branch))]
    DegenerateEigensystem { branch: Option<String> },

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("ensemble of {n} fluctuators exceeds exact-sum cap {cap}; use the continuum path")]
    EnsembleCapacity { n: usize, cap: usize },

    #[error("coherence undefined: initial <a> is zero")]
    UndefinedCoherence,

    #[error("step size underflow at t = {t:e} (attempted h = {h:e}); system too stiff")]
    Stiffness { t: f64, h: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("separation r = {r} is below the cutoff r0 = {r0}")]
    CutoffViolation { r: f64, r0: f64 },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

fn branch_suffix(branch: &Option<String>) -> String {
    match branch {
        Some(b) => format!(" in branch {b}"),
        None => String::new(),
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
