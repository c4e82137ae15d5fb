use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point set would have {count} points, limit is {limit}")]
    TooManyPoints { count: usize, limit: usize },

    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operands live on different index sets")]
    IndexSetMismatch,

    #[error("index {index} out of range for a point set of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(
        "weight value {value:e} at |x| = {radius} exceeds 1e300; weight and extent do not match"
    )]
    WeightOverflow { value: f64, radius: f64 },

    #[error("weight {name} returned a non-positive or non-finite value {value} at |x| = {radius}")]
    InvalidWeightValue {
        name: String,
        value: f64,
        radius: f64,
    },

    #[error("index set is not flagged as a lattice section; side-diagonal structure is undefined")]
    NotLattice,

    #[error("matrix is singular or ill-conditioned (condition estimate {cond:e}, cap {cap:e})")]
    IllConditioned { cond: f64, cap: f64 },

    #[error("power iteration hit the cap of {iterations} iterations (last estimate {estimate})")]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        iterate: Vec<num_complex::Complex64>,
    },

    #[error("norm overflow while computing {0}")]
    Overflow(String),

    #[error("quadrature grid {grid:?} aliases offsets up to {bandwidth:?}; need at least 2*|n|+2 per axis")]
    Aliasing {
        grid: Vec<usize>,
        bandwidth: Vec<i64>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than the inputs' shape
    /// (singular matrices, overflow, non-convergence).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::WeightOverflow { .. }
                | Error::IllConditioned { .. }
                | Error::NoConvergence { .. }
                | Error::Overflow(_)
                | Error::Precondition(_)
        )
    }
}
