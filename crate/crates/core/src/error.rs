use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape or size preconditions violated (mismatched dims, non power of
    /// two length, row count exceeding an operator's input size, ...).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Bad argument values (empty input, zero weights everywhere, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// Numerically rank-deficient matrix; `col` is the offending column.
    #[error("singular matrix: column {col} is numerically dependent on its predecessors")]
    Singular { col: usize },

    /// A numerical invariant failed (non-SPD update, certificate violation).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An iteration cap guarding a theoretical guarantee was exceeded,
    /// meaning a caller-supplied contract (oracle validity, enclosure bound)
    /// does not hold.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Coreset sampling produced no rows; retry with a larger sample target.
    #[error("empty coreset: expected sample count {expected:.2} produced no rows; increase s")]
    EmptyCoreset { expected: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Matrix file parse failures (bad magic, bad header, non-finite entry).
    #[error("format error: {0}")]
    Format(String),
}
