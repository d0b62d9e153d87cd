use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("fan-in must be an odd integer >= 3, got {0}")]
    InvalidFanIn(u64),
    #[error("bias must lie in [-1, 1], got {0}")]
    InvalidBias(f64),
    #[error("channel reliability must lie in (0, 1], got {0}")]
    InvalidReliability(f64),
    #[error("correlation must lie in [0, 1), got {0}")]
    InvalidCorrelation(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver failed to converge after {0} iterations")]
    NoConvergence(u32),
    #[error("mixing depth requires a supercritical spec (alpha > 1)")]
    SubcriticalMixing,
    #[error("deeper-is-worse regime: leaf MSE {v0} is at or below the floor {floor}")]
    BelowFloor { v0: f64, floor: f64 },
    #[error("tree size b^L overflows: b={b}, L={depth}")]
    TreeOverflow { b: u64, depth: u32 },
    #[error("infeasible allocation: {0}")]
    Infeasible(String),
    #[error("envelope input must have strictly increasing slopes")]
    UnsortedSlopes,
    #[error("empty envelope")]
    EmptyEnvelope,
    #[error("estimator needs at least 2 agents and 2 tasks, got {agents} x {tasks}")]
    TooFewSamples { agents: usize, tasks: usize },
    #[error("ragged input matrix")]
    RaggedMatrix,
    #[error("simulation size guard: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
