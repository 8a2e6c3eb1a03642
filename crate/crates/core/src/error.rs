use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("negative relaxation rate {0}")]
    NegativeRate(f64),

    #[error("hamiltonian is not hermitian (max |H - H^†| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("steady state is not unique: {null_dim} null directions below tolerance (smallest singular values {smallest:?})")]
    NonUniqueSteadyState { null_dim: usize, smallest: Vec<f64> },

    #[error("steady state residual {residual:e} exceeds bound {bound:e}")]
    SteadyStateResidual { residual: f64, bound: f64 },

    #[error("periodic steady state did not converge with {harmonics} harmonics (change {change:e})")]
    HarmonicTruncation { harmonics: usize, change: f64 },

    #[error("step size underflow: trace drift {drift:e} persists at dt = {dt:e} us")]
    StepUnderflow { dt: f64, drift: f64 },

    #[error("drive on forbidden transition {0}")]
    ForbiddenTransition(String),

    #[error("more than one drive on transition {0}")]
    DuplicateDrive(String),

    #[error("dark-state condition diverges at theta = 0 mod 2pi")]
    DivergentCondition,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("least squares did not converge after {iterations} iterations (gradient {gradient:e})")]
    NonConvergence { iterations: usize, gradient: f64 },

    #[error("singular normal equations (condition number {condition:e})")]
    SingularNormalEquations { condition: f64 },

    #[error("fit did not converge")]
    Unconverged,

    #[error("degenerate regression: x has zero variance")]
    DegenerateRegression,

    #[error("frequency extraction failed: {0}")]
    Extraction(String),

    #[error("detuning grid is empty")]
    EmptyGrid,
}

impl Error {
    /// True when the error stems from invalid user input rather than a
    /// numerical failure.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Sample { source, .. } => source.is_config(),
            Error::DimensionMismatch { .. }
            | Error::NotSquare { .. }
            | Error::NegativeRate(_)
            | Error::NotHermitian(_)
            | Error::InvalidState(_)
            | Error::ForbiddenTransition(_)
            | Error::DuplicateDrive(_)
            | Error::DivergentCondition
            | Error::InvalidParameter(_)
            | Error::IndexOutOfRange { .. }
            | Error::EmptyGrid => true,
            _ => false,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
