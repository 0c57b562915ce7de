use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Each variant belongs to one module,
/// available through [`Error::module`], and maps onto a process exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("mode {mode} out of range for a {modes}-mode space")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("invalid Fock space: {0}")]
    InvalidSpace(String),

    #[error("coherent state tail weight {tail:.3e} exceeds {limit:.1e}; raise the cutoff")]
    TailWeight { tail: f64, limit: f64 },

    #[error("squared polynomial value {value} exceeds the exact float budget 2^53")]
    FloatBudget { value: String },

    #[error("schedule parameter s = {0} outside [0, 1]")]
    ScheduleRange(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{module}: precondition violated: {message}")]
    Precondition { module: &'static str, message: String },

    #[error("norm drift {drift:.3e} exceeds {limit:.1e}")]
    NormDrift { drift: f64, limit: f64 },

    #[error("non-finite amplitude at step {step}; the time step is too large")]
    NonFinite { step: usize },

    #[error("diagonalization failed: {0}")]
    Diagonalization(String),

    #[error("{what} size {size} exceeds budget {budget}")]
    Budget { what: &'static str, size: u128, budget: u128 },

    #[error("filling mismatch: {atoms} atoms cannot fill {sites} sites with {filling} each")]
    Filling { atoms: usize, sites: usize, filling: usize },

    #[error("mean field did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

impl Error {
    /// Module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::Dimension { .. } => "polynomial",
            Error::ModeOutOfRange { .. } | Error::InvalidSpace(_) | Error::TailWeight { .. } => {
                "fockspace"
            }
            Error::FloatBudget { .. } | Error::ScheduleRange(_) => "hamiltonian",
            Error::NormDrift { .. } | Error::NonFinite { .. } | Error::Diagonalization(_) => {
                "adiabatic"
            }
            Error::Budget { .. } => "oracle",
            Error::Filling { .. } | Error::NonConvergence { .. } => "hubbard",
            Error::Config(_) => "config",
            Error::Precondition { module, .. } => module,
        }
    }

    /// 2: configuration or input error, 3: numerical failure, 4: budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Dimension { .. }
            | Error::ModeOutOfRange { .. }
            | Error::InvalidSpace(_)
            | Error::ScheduleRange(_)
            | Error::Config(_)
            | Error::Precondition { .. }
            | Error::Filling { .. } => 2,
            Error::TailWeight { .. }
            | Error::FloatBudget { .. }
            | Error::NormDrift { .. }
            | Error::NonFinite { .. }
            | Error::Diagonalization(_)
            | Error::NonConvergence { .. } => 3,
            Error::Budget { .. } => 4,
        }
    }

    pub(crate) fn precondition(module: &'static str, message: impl Into<String>) -> Self {
        Error::Precondition { module, message: message.into() }
    }
}
