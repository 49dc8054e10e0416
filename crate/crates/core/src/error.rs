//! Error type shared by the matrix kernels, solvers and model code.

use std::fmt;

/// Errors produced by numeric kernels, solvers, training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not conform for the named operation.
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// Symmetry deviation exceeds the accepted tolerance.
    NotSymmetric { deviation: f64, tolerance: f64 },
    /// A NaN or infinite entry was rejected at construction.
    NonFinite { row: usize, col: usize },
    /// Backing buffer length does not match `rows * cols`.
    DataLength { expected: usize, got: usize },
    /// An operation received an empty matrix it cannot handle.
    EmptyMatrix { op: &'static str },
    /// An iterative factorization failed to converge within its cap.
    ConvergenceFailure {
        op: &'static str,
        size: usize,
        residual: f64,
    },
    /// The spectra of A and -B overlap; the Sylvester system is singular.
    /// A small ridge added to A usually resolves this.
    SpectralOverlap { pivot: f64, tolerance: f64 },
    /// A dense linear system turned out singular.
    SingularSystem { op: &'static str },
    /// Problem size exceeds a documented cap.
    SizeCap {
        op: &'static str,
        size: usize,
        cap: usize,
    },
    /// A configuration field is out of its valid range.
    InvalidConfig {
        field: &'static str,
        message: String,
    },
    /// A plain argument error not covered by a more specific variant.
    InvalidArgument {
        op: &'static str,
        message: String,
    },
    /// Two aligned collections have different lengths.
    LengthMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },
    /// Classification requires at least one prototype.
    EmptyPrototypes,
    /// Recall is undefined for a user without relevant items.
    EmptyRelevance { user: usize },
    /// Every user was excluded from a metric mean.
    NoIncludableUsers,
    /// Grid search received an empty grid.
    EmptyGrid,
    /// A requested user split leaves one side empty.
    DegenerateSplit { users: usize, test_users: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, left, right } => write!(
                f,
                "{op}: shape mismatch, {}x{} against {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::NotSquare { rows, cols } => {
                write!(f, "matrix must be square, got {rows}x{cols}")
            }
            Error::NotSymmetric {
                deviation,
                tolerance,
            } => write!(
                f,
                "matrix is not symmetric: ||M - M'||_F = {deviation:.3e} exceeds {tolerance:.3e}"
            ),
            Error::NonFinite { row, col } => {
                write!(f, "non-finite entry at ({row}, {col})")
            }
            Error::DataLength { expected, got } => {
                write!(f, "data length mismatch: expected {expected}, got {got}")
            }
            Error::EmptyMatrix { op } => write!(f, "{op}: empty matrix"),
            Error::ConvergenceFailure { op, size, residual } => write!(
                f,
                "{op}: no convergence for a {size}x{size} matrix (residual {residual:.3e})"
            ),
            Error::SpectralOverlap { pivot, tolerance } => write!(
                f,
                "spectral overlap: an eigenvalue of A matches an eigenvalue of -B \
                 (pivot {pivot:.3e} below {tolerance:.3e}); adding a small ridge to A \
                 usually resolves this"
            ),
            Error::SingularSystem { op } => write!(f, "{op}: singular linear system"),
            Error::SizeCap { op, size, cap } => {
                write!(f, "{op}: problem size {size} exceeds the cap of {cap}")
            }
            Error::InvalidConfig { field, message } => {
                write!(f, "invalid config field `{field}`: {message}")
            }
            Error::InvalidArgument { op, message } => write!(f, "{op}: {message}"),
            Error::LengthMismatch { op, left, right } => {
                write!(f, "{op}: length mismatch, {left} against {right}")
            }
            Error::EmptyPrototypes => write!(f, "prototype set is empty"),
            Error::EmptyRelevance { user } => {
                write!(f, "user {user} has no relevant items; recall is undefined")
            }
            Error::NoIncludableUsers => {
                write!(f, "no users with non-empty relevance to average over")
            }
            Error::EmptyGrid => write!(f, "hyperparameter grid is empty"),
            Error::DegenerateSplit { users, test_users } => write!(
                f,
                "degenerate split: {test_users} test users out of {users}"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
