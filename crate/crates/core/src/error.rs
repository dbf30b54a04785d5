use thiserror::Error;

/// Errors raised by the geometry, discretization and solver stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("assumption {assumption} violated at element {element}: {detail}; refine the mesh")]
    AssumptionViolation {
        assumption: u8,
        element: usize,
        detail: String,
    },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("iteration did not converge after {iterations} steps (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        match self {
            Error::Stage { .. } => self,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, without stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code for the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => 2,
            Error::AssumptionViolation { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
