use thiserror::Error;

/// Errors raised by parameter validation, the cost model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("n must be a power of two for recursive doubling (got n={0})")]
    NotPowerOfTwo(usize),

    #[error("step index {step} out of range for {steps} steps")]
    StepOutOfRange { step: usize, steps: usize },

    #[error("threshold {threshold} out of range [0, {max}]")]
    ThresholdOutOfRange { threshold: usize, max: usize },

    #[error("flow {src}->{dst} references a node outside 0..{n}")]
    NodeOutOfRange { src: usize, dst: usize, n: usize },

    #[error("flow {src}->{dst} has no link in the current matching")]
    NotConnected { src: usize, dst: usize },

    #[error("plan does not match the parameters: {0}")]
    PlanMismatch(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error(
        "sweep cell m_bytes={m_bytes} alpha_ns={alpha_ns} delta_ns={delta_ns} failed: {source}"
    )]
    Cell {
        m_bytes: u64,
        alpha_ns: f64,
        delta_ns: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
