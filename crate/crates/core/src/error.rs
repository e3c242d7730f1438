use thiserror::Error;

/// Errors raised by the library. Criteria that merely fail to decide return
/// an `Inconclusive` verdict instead of an error.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in matrix")]
    NonFinite,
    #[error("matrix is not an orthogonal projection (deviation {deviation:e})")]
    NotAProjection { deviation: f64 },
    #[error("criterion requires the {expected} representation")]
    WrongRepresentation { expected: &'static str },
    #[error("elementary-operator form has no positive part")]
    EmptyPlusList,
    #[error("expected {expected} basis elements, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("split p = {p} but this criterion needs p = {expected}")]
    WrongSplit { p: usize, expected: usize },
    #[error("U has zero or non-finite Frobenius norm")]
    BadNormalization,
    #[error("vector entry {index} is zero")]
    ZeroEntry { index: usize },
    #[error("diagonal entry d[{index}][{index}] is zero; the map is not positive")]
    ZeroDiagonal { index: usize },
    #[error("parameter t must be nonnegative, got {0}")]
    NegativeT(f64),
    #[error("permutation is the identity; the threshold is undefined")]
    IdentityPermutation,
    #[error("permutation is not an involution")]
    NotInvolution,
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("D must be nonnegative with every row and column sum equal to n (deviation {deviation:e})")]
    NotDoublyStochasticScaled { deviation: f64 },
    #[error("D has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("bad weights: {0}")]
    BadWeights(String),
    #[error("bad search budget: {0}")]
    BadBudget(String),
    #[error("family is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("unknown criterion '{0}'")]
    UnknownCriterion(String),
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("malformed JSON input: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
