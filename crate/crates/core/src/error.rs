use thiserror::Error;

/// Errors raised by the kernel calculus, the path machinery and the experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: expected {expected} cells, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("time {t} is not a boundary of the {n_cells}-cell grid")]
    OffGrid { t: f64, n_cells: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("order {order} outside the supported range {min}..={max}")]
    OrderOutOfRange { order: usize, min: usize, max: usize },

    #[error("kernel storage of {len} entries exceeds the cap of {cap}")]
    CapacityExceeded { len: usize, cap: usize },

    /// The point sits on the Lebesgue-null set where region membership is
    /// undefined (tied coordinates, or a coordinate equal to the split time).
    #[error("point lies on the exceptional null set: {0}")]
    ExceptionalPoint(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// An internal consistency check failed (e.g. two extractions of the same
    /// representation kernel disagree).
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
