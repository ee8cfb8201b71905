use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("particle index {index} out of range (N = {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("thermostat coordinate s = {0} is not positive")]
    NonPositiveS(f64),

    #[error("cell tensor is singular or inverted (det F = {0:e})")]
    SingularCell(f64),

    #[error("non-positive separation {separation:e} between particles {i} and {j}")]
    CoincidentParticles { i: usize, j: usize, separation: f64 },

    #[error("separation must be positive, got {0}")]
    NonPositiveSeparation(f64),

    #[error("implicit midpoint did not converge at step {step} after {iterations} iterations (residual {residual:e}); try a smaller step")]
    NonConvergence { step: usize, iterations: usize, residual: f64 },

    #[error("state invariant violated at step {step}: {reason}")]
    StateInvariant { step: usize, reason: String },

    #[error("momenta are off the admissible set of the degenerate kinetic energy (defect {defect:e})")]
    ConstraintViolation { defect: f64 },

    #[error("mass matrix rank {rank} below expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("retry cap exceeded while sampling initial states ({0} attempts)")]
    RetryCapExceeded(usize),

    #[error("sample {sample} failed: {source}")]
    SampleFailed { sample: usize, source: Box<Error> },

    #[error("time {time} outside trajectory range [{start}, {end}]")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },

    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("particle {particle} at {position:?} lies outside the padded grid box")]
    OutsideGrid { particle: usize, position: [f64; 3] },

    #[error("empty ensemble")]
    EmptyBatch,

    #[error("field `{0}` missing")]
    MissingField(String),

    #[error("grid too small for stencil: {0}")]
    GridTooSmall(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("periodic bond images are not supported in field extraction")]
    PeriodicBonds,
}
