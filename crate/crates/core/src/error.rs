use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (supported: 1..=8)")]
    UnsupportedDim(usize),

    #[error("matrix has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },

    #[error("Bloch vector norm {0} exceeds 1")]
    BlochOutOfBall(f64),

    #[error("not a density operator: {0}")]
    InvalidState(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("noise parameter eta = {0} outside the allowed range")]
    EtaOutOfRange(f64),

    #[error("probability {0} outside [0, 1]")]
    ProbOutOfRange(f64),

    #[error("trace preservation violated (max deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("{povm} POVM elements for {states} states")]
    CountMismatch { povm: usize, states: usize },

    #[error("all state pairs are degenerate (q_x rho_x = q_y rho_y)")]
    DegeneratePair,

    #[error("solver did not reach a certified optimum (best residual {0:.3e})")]
    ConvergenceFailure(f64),

    #[error("updated measurement does not resolve the identity")]
    NotResolvable,

    #[error("protocol requires equal priors")]
    NotEqualPriors,

    #[error("unsupported ensemble size {0} (supported: 2..=8)")]
    UnsupportedSize(usize),

    #[error("invalid unitary: {0}")]
    NotUnitary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
