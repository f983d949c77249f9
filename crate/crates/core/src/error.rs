use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length mismatch: expected {expected}, got {got}")]
    DataLength { expected: usize, got: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("ragged rows: row {row} has {got} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("{op}: dimension mismatch ({}x{} vs {}x{})", left.0, left.1, right.0, right.1)]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("factor is rank deficient (rank {rank}, need {required}); solution not unique")]
    RankDeficient { rank: usize, required: usize },

    #[error("matrix is singular under the tolerance policy")]
    Singular,

    #[error("row {0} is identically zero")]
    ZeroRow(usize),

    #[error("invalid tolerance: rel_eps must be > 0 and abs_eps >= 0 (got {rel_eps}, {abs_eps})")]
    InvalidTolerance { rel_eps: f64, abs_eps: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("numeric range exceeded: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
