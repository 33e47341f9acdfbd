use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("concentration {value} outside the equation-of-state domain (psi_infinity = {psi_infinity})")]
    EosDomain { value: f64, psi_infinity: f64 },

    #[error("geometric failure: {0}")]
    Geometric(String),

    #[error("point ({0}, {1}) lies outside the computational domain")]
    PointOutside(f64, f64),

    #[error("mesh generation {found} does not match expected generation {expected}")]
    StaleGeneration { expected: u64, found: u64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("refinement did not terminate after {0} rounds")]
    Refinement(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Geometric(_) | Error::PointOutside(..) => 2,
            Error::Solver(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
