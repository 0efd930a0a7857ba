use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix of order {order} is not d^2 for a positive integer d")]
    BadOrder { order: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("local factor {index} is not unitary (defect {defect:.3e})")]
    NonUnitaryFactor { index: usize, defect: f64 },

    #[error("input is not unitary (defect {defect:.3e})")]
    NonUnitaryInput { defect: f64 },

    #[error("polar factor is not unique: smallest singular value {sigma_min:.3e}")]
    SingularInput { sigma_min: f64 },

    #[error("symbol {value} out of range 1..={d} at cell ({row}, {col})")]
    BadSymbolRange {
        row: usize,
        col: usize,
        value: usize,
        d: usize,
    },

    #[error("modular OLS construction needs odd d, got {0}")]
    EvenDimension(usize),

    #[error("unknown design or permutation name `{0}`")]
    UnknownName(String),

    #[error("wrong dimension: expected d = {expected}, got {found}")]
    WrongDimension { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad subsystem subset: {0}")]
    BadSubset(String),

    #[error("division by zero in the cyclotomic field")]
    DivisionByZero,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invariant violated in row {row}: {msg}")]
    InvariantViolation { row: usize, msg: String },

    #[error("global check requires all 36 rows, only {present} present")]
    IncompleteMatrix { present: usize },

    #[error("state is not normalised (norm {norm:.15})")]
    NotNormalized { norm: f64 },

    #[error("tensor is not 2-unitary (delta {delta:.3e})")]
    NotTwoUnitary { delta: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
