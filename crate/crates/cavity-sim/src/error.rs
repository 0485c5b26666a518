use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between parsing a config and writing results.
///
/// The CLI maps these onto process exit codes (see [`SimError::exit_code`]):
/// configuration and validation problems exit with 2, numerical breakdowns
/// with 3, and everything else with 1.
#[derive(Debug, Error)]
pub enum SimError {
    /// A config document could not be parsed or referenced an unknown key.
    #[error("config error: {0}")]
    Config(String),

    /// A parsed config violated a physical or structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Attempted to normalize a state whose norm is numerically zero.
    #[error("cannot normalize a zero state (norm = {norm:.3e})")]
    ZeroState { norm: f64 },

    /// A metric was requested on a state that is not unit-norm.
    #[error("state is not normalized (norm = {norm:.17}, deviation {deviation:.3e})")]
    NotNormalized { norm: f64, deviation: f64 },

    /// An amplitude or motional variable became NaN/inf during integration.
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    /// The adaptive integrator could not honor its tolerances at any
    /// representable step size.
    #[error("adaptive step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    /// The amplitude-prefactor term in quotient form divides by the momentum,
    /// which has (numerically) vanished.
    #[error("prefactor quotient -p_dot/p is singular at t = {t} (|p| = {p_abs:.3e})")]
    QuotientSingular { t: f64, p_abs: f64 },

    /// Two time series that must share a sampling grid do not.
    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        SimError::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI uses for this error.
    ///
    /// 2 = configuration problem, 3 = numerical failure, 1 = anything else
    /// (verification failures also exit with 1, but are not errors here).
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Validation(_) => 2,
            SimError::NonFiniteState { .. }
            | SimError::StepUnderflow { .. }
            | SimError::QuotientSingular { .. }
            | SimError::ZeroState { .. }
            | SimError::NotNormalized { .. } => 3,
            SimError::GridMismatch(_) | SimError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
