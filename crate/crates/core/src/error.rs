use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by the numeric modules.
///
/// Gate failures carry the residual that tripped them so callers can report
/// how far off an input was.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("length mismatch: expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not positive semidefinite (most negative eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("Hermitian eigensolver did not converge")]
    EigenNoConvergence,
    #[error("supplied Choi matrix disagrees with the Kraus family (residual {residual:.3e})")]
    ChoiMismatch { residual: f64 },
    #[error("map is not pure (Choi rank {rank})")]
    NotPure { rank: usize },
    #[error("pure maps are not proportional (residual {residual:.3e})")]
    NotProportional { residual: f64 },
    #[error("map is not a CP isometry (residual {residual:.3e})")]
    NotIsometry { residual: f64 },
    #[error("environment Gram blocks are not scalar (residual {residual:.3e}, bound {bound:.3e})")]
    GramBlockFailure { residual: f64, bound: f64 },
    #[error("Choi eigenvector {index} does not reshape to an isometry (residual {residual:.3e})")]
    ReshapeNotIsometry { index: usize, residual: f64 },
    #[error("decomposition invariant `{which}` violated (value {value:.3e})")]
    DecompositionInvariant { which: &'static str, value: f64 },
    #[error("basis is not unitary (residual {residual:.3e})")]
    NonUnitaryBasis { residual: f64 },
    #[error("bases coincide up to phases and ordering (distance {distance:.3e})")]
    BasesCoincide { distance: f64 },
    #[error("comonoid laws fail (max residual {max_residual:.3e}, bound {bound:.3e})")]
    LawsFailed { max_residual: f64, bound: f64 },
    #[error("proportionality failed at step `{step}` (residual {residual:.3e})")]
    ProportionalityFailed { step: String, residual: f64 },
    #[error("proof trace invariant `{which}` violated (value {value:.3e})")]
    TraceInvariant { which: String, value: f64 },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

pub(crate) fn mismatch(context: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
