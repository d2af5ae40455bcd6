use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A system parameter violates its invariant (κ > 0, ω² ≥ 0, b_j ≥ 0, n ≥ 1).
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// Vector lengths disagree with the system dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Evaluation requested at q_i = 0 while b_i ≠ 0.
    #[error("singular state: q_{index} = 0 with nonzero b_{index}")]
    SingularState { index: usize },

    /// A point lies too close to the singular set for derivative evaluation.
    #[error("state too close to the singular set: |q_{index}| = {value:e}")]
    SingularityProximity { index: usize, value: f64 },

    /// An index argument lies outside its admissible range.
    #[error("index {index} out of range [{min}, {max}]")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    /// The implicit step solve did not converge.
    #[error("implicit solve did not converge (residual {residual:e}); try a smaller step")]
    NonConvergence { residual: f64 },

    /// A numerically integrated orbit approached the centrifugal wall.
    #[error("trajectory crossed the singularity guard at t = {time}: |q_{index}| = {value:e}")]
    SingularityCrossing { time: f64, index: usize, value: f64 },

    /// Closed-form orbits exist only for E = 2H > 0.
    #[error("closed form requires E>0 (got E = {energy})")]
    UnsupportedEnergy { energy: f64 },

    /// Closed-form orbits require c = κω² ≠ 0.
    #[error("closed form requires c = κω² ≠ 0")]
    UnsupportedCoupling,

    /// A degenerate configuration the closed form does not cover.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Orbit constants that cannot describe the given state.
    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    /// Argument outside the domain of a closed-form relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Fewer samples than a finite-difference stencil needs.
    #[error("trajectory too short: {0} samples (need at least 3)")]
    TrajectoryTooShort(usize),

    /// Generic invalid argument (non-positive step, unsorted times, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
