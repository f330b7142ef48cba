use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid edge {edge}: need 0 < a < b, got a={a}, b={b}")]
    InvalidEdge { edge: String, a: f64, b: f64 },
    #[error("duplicate edge id {0}")]
    DuplicateEdge(String),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("A B^dagger is not Hermitian (residual {residual:.3e})")]
    HermiticityViolation { residual: f64 },
    #[error("boundary data has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("numerical rank is ambiguous: singular value {sigma:.3e} lies near threshold {threshold:.3e}")]
    RankAmbiguous { sigma: f64, threshold: f64 },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("boundary condition {condition} is not available: {reason}")]
    UnsupportedCondition { condition: &'static str, reason: String },
    #[error("vertex matrix is singular at k = {k}")]
    SingularAtK { k: f64 },
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("value {value} lies outside the computed range [{lo}, {hi}]")]
    RangeExceeded { value: f64, lo: f64, hi: f64 },
    #[error("crossings closer than the scan resolution near k = {k}")]
    ToleranceTooCoarse { k: f64 },
    #[error("eigenphase bookkeeping is inconsistent near k = {k} (offset {offset:.3e})")]
    PhaseInconsistency { k: f64, offset: f64 },
    #[error("shortest edge {l_min:.6} does not exceed the orbit convergence length {l_sigma:.6}")]
    ConditionViolated { l_min: f64, l_sigma: f64 },
    #[error("spectral tail bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    TailBoundExceeded { bound: f64, tol: f64 },
    #[error("need at least {needed} data points, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("{what} did not converge (remainder {remainder:.3e})")]
    ConvergenceFailure { what: &'static str, remainder: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidEdge { .. } => "INVALID_EDGE",
            Error::DuplicateEdge(_) => "DUPLICATE_EDGE",
            Error::EmptyGraph => "EMPTY_GRAPH",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::HermiticityViolation { .. } => "HERMITICITY_VIOLATION",
            Error::RankDeficient { .. } => "RANK_DEFICIENT",
            Error::RankAmbiguous { .. } => "RANK_AMBIGUOUS",
            Error::NotUnitary { .. } => "NOT_UNITARY",
            Error::UnsupportedCondition { .. } => "UNSUPPORTED_CONDITION",
            Error::SingularAtK { .. } => "SINGULAR_AT_K",
            Error::InvalidRange { .. } => "INVALID_RANGE",
            Error::RangeExceeded { .. } => "RANGE_EXCEEDED",
            Error::ToleranceTooCoarse { .. } => "TOLERANCE_TOO_COARSE",
            Error::PhaseInconsistency { .. } => "PHASE_INCONSISTENCY",
            Error::ConditionViolated { .. } => "CONDITION_VIOLATED",
            Error::TailBoundExceeded { .. } => "TAIL_BOUND_EXCEEDED",
            Error::InsufficientData { .. } => "INSUFFICIENT_DATA",
            Error::ConvergenceFailure { .. } => "CONVERGENCE_FAILURE",
            Error::InvalidParameter { .. } => "INVALID_PARAMETER",
        }
    }

    /// True for errors caused by invalid input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidEdge { .. }
                | Error::DuplicateEdge(_)
                | Error::EmptyGraph
                | Error::DimensionMismatch { .. }
                | Error::HermiticityViolation { .. }
                | Error::RankDeficient { .. }
                | Error::RankAmbiguous { .. }
                | Error::NotUnitary { .. }
                | Error::UnsupportedCondition { .. }
                | Error::InvalidRange { .. }
                | Error::ConditionViolated { .. }
                | Error::InvalidParameter { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
