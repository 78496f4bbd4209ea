use thiserror::Error;

/// Errors raised by the model constructors and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("objects live on different cell spaces")]
    AmbientMismatch,

    #[error("covering violated at cell {cell}")]
    CoveringViolation { cell: u32 },

    #[error("no {colours}-coloured refinement exists; cell {cell} cannot be placed")]
    Infeasible { cell: u32, colours: usize },

    #[error("time {requested} exceeds the truncation depth {depth}")]
    DepthExhausted { requested: usize, depth: usize },

    #[error("integer overflow while counting words of length {n}")]
    Overflow { n: usize },

    #[error("invalid transfer matrix: {0}")]
    InvalidMatrix(String),

    #[error("map is not a bijection on cells: {0}")]
    NotBijective(String),

    #[error("approximation error {measured} exceeds the admissible {allowed}")]
    Precondition { measured: f64, allowed: f64 },

    #[error("operand of degree {degree} does not fit in {n} tensor factors")]
    TruncationInvalid { degree: usize, n: usize },

    #[error("family of {m} vectors exceeds the exact enumeration cap {cap}")]
    CapExceeded { m: usize, cap: usize },

    #[error("vector {index} has norm {norm}, expected 1")]
    Normalization { index: usize, norm: f64 },

    #[error("model of {size} cells exceeds the size cap {cap}")]
    SizeCap { size: u128, cap: u128 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
