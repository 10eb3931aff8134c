use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "matrix is not symmetric: max |M_ij - M_ji| = {max_asymmetry:e} exceeds {tolerance:e}"
    )]
    NonSymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("eigensolver failed to converge ({0})")]
    Convergence(String),

    #[error("eigen residual {residual:e} exceeds {bound:e} for eigenvalue #{index}")]
    Residual {
        index: usize,
        residual: f64,
        bound: f64,
    },

    #[error("negative entry {value} at ({row}, {col}) in a matrix required to be nonnegative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("eigenbasis is incomplete: sum of squared overlaps = {sum} (expected 1)")]
    Incomplete { sum: f64 },

    #[error("theta = {theta} is not strictly above the top eigenvalue {mu1} of the perturbation")]
    InsideSpectrum { theta: f64, mu1: f64 },

    #[error("found {0} roots of the secular function above the spectrum; at most 2 are possible")]
    TooManyRoots(usize),

    #[error("secular derivative {0} vanishes or has the wrong sign at a detached root")]
    DegenerateDerivative(f64),

    #[error("vector is not unit norm: |x| = {0}")]
    NotUnit(f64),

    #[error("value {value} outside its validity domain: {reason}")]
    OutOfDomain { value: f64, reason: String },

    #[error("cycle length {0} outside the supported range 2..=8")]
    CycleLength(usize),

    #[error("quadrature did not converge: error estimate {estimate:e} > tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("conditional edge probability at ({row}, {col}) is {value}, outside [0, 1]")]
    ProbabilityRange { row: usize, col: usize, value: f64 },

    #[error("malformed matrix dump: {0}")]
    Format(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical trouble.
    /// File-system failures count as configuration problems.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_config_error(),
            Error::InvalidParams(_)
            | Error::CycleLength(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::OutOfDomain { .. } => true,
            _ => false,
        }
    }

    pub fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
