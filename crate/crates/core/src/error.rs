use thiserror::Error;

/// Errors raised by the tensor, projector and functional routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("party count mismatch: {left} vs {right}")]
    PartyMismatch { left: usize, right: usize },

    #[error("nonzero tensor required")]
    ZeroTensor,

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid bipartition: {0}")]
    Bipartition(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("dimension mismatch on leg {leg}: expected {expected} columns, got {got}")]
    LegDimension { leg: usize, expected: usize, got: usize },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("restricted distribution is degenerate: no bipartition restricts nontrivially")]
    DegenerateRestriction,

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("non-laminar distribution requires an explicit projector order")]
    OrderRequired,

    #[error("invalid projector order: {0}")]
    Order(String),

    #[error("level {level} exceeds the cap {cap}")]
    LevelCap { level: usize, cap: usize },

    #[error("power state too large: {0} entries")]
    PowerTooLarge(usize),

    #[error("unbalanced bipartition: side dimensions {left} and {right}")]
    Unbalanced { left: usize, right: usize },

    #[error("tensor is unstable (capacity 0)")]
    Unstable,

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown claim id `{id}`; available: {available}")]
    UnknownClaim { id: String, available: String },
}

pub type Result<T> = std::result::Result<T, Error>;
