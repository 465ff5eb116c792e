use thiserror::Error;

/// Crate-wide error type. Variant names follow the failure modes of the
/// individual subsystems (solvers, potential evaluation, kernels, I/O).
#[derive(Debug, Error)]
pub enum Error {
    #[error("input field has non-zero mean: |mean| = {mean:.3e}, limit {limit:.3e}")]
    NonZeroMean { mean: f64, limit: f64 },

    #[error("{solver} failed to converge: residual {residual:.3e} after {iters} iterations")]
    SolverDivergence {
        solver: &'static str,
        residual: f64,
        iters: usize,
    },

    #[error("argument {value} outside the admissible domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },

    #[error("scalar resolvent did not converge at s = {s}")]
    NoConvergence { s: f64 },

    #[error("kernel truncation radius {radius} exceeds half the domain extent {limit}")]
    KernelTooWide { radius: f64, limit: f64 },

    #[error("Newton iteration diverged at step {step}: residual {residual:.3e}")]
    NewtonDivergence { step: usize, residual: f64 },

    #[error("advective CFL violated: max |u| dt / h = {cfl:.3e} > 1")]
    CflViolation { cfl: f64 },

    #[error("input field is identically zero")]
    ZeroInput,

    #[error("config missing required key `{0}`")]
    MissingKey(String),

    #[error("config key `{key}` invalid: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("corrupt snapshot header: {0}")]
    CorruptHeader(String),

    #[error("snapshot size mismatch: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("solver error at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("output directory is locked by another run: {0}")]
    OutputLocked(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach the time-step index at which a sub-solver failed.
    pub fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
