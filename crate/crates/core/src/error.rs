use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported lattice dimension {0} (supported: 2..={max})", max = crate::lattice::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} requires a nonempty set")]
    EmptySet(&'static str),

    #[error("site {0} lies outside the environment window")]
    OutsideWindow(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("enumeration needs {paths:.3e} paths, budget is {budget}")]
    BudgetExceeded { paths: f64, budget: u64 },

    #[error("site {0} is not an obstacle")]
    NotAnObstacle(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error(
        "no balanced radius in [L^(5/6), L] for L={big_l}, delta={delta}, rho={rho} \
         (smallest radius tried {last_l})"
    )]
    NoBalancedRadius { big_l: u64, delta: f64, rho: f64, last_l: f64 },

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
