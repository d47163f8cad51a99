use thiserror::Error;

/// Crate-wide error type.
///
/// Everything that can go wrong falls into one of three families: a model
/// specification that violates a structural constraint, a numerical run that
/// left its domain of validity (blow-up, non-finite drift), or plain I/O and
/// serialization trouble when reading configs or writing artifacts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    /// A retained mode whose linearized drift rate is not strictly positive.
    /// The exact Ornstein-Uhlenbeck sampler and every invariant-variance
    /// formula divide by this rate, so the model is rejected outright.
    #[error("mode {label}: drift rate mu = {mu:.6e} is not positive; raise the damping or viscosity")]
    NonPositiveDrift { label: String, mu: f64 },

    #[error("joint increment requires a positive drift rate (got mu = {mu:.6e})")]
    NonPositiveRate { mu: f64 },

    #[error("fields belong to different operator spectra")]
    SpecMismatch,

    #[error("time step {dt} does not split the horizon {t_final} into a whole number of steps")]
    StepMismatch { dt: f64, t_final: f64 },

    #[error("blow-up guard tripped at t = {time:.6}: |A^theta u| = {norm:.3e} exceeds {guard:.3e}")]
    BlowUp { time: f64, norm: f64, guard: f64 },

    #[error("non-finite drift coefficient at t = {time:.6}; ledger aborted")]
    NonFiniteDrift { time: f64 },

    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("operation requires a nonlinear path record")]
    WrongPathKind,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("corrupt path dump: {0}")]
    CorruptDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
