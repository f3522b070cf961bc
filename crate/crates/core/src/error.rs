use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: |det| = {det:e} <= tolerance {tol:e}")]
    SingularMatrix { det: f64, tol: f64 },

    #[error("invalid configuration ({field}): {message}")]
    InvalidConfig { field: String, message: String },

    #[error("degenerate plastic state: min det P = {min_det:e} below floor {floor:e}")]
    DegeneratePlasticState { min_det: f64, floor: f64 },

    #[error("linear solve failed: relative residual {residual:e} after {iterations} iterations")]
    LinearSolveFailure { residual: f64, iterations: usize },

    #[error("non-finite value in {0}")]
    NonfiniteState(&'static str),

    #[error("negative enthalpy {min:e} (max {max:e}); time step too large")]
    NegativeTemperature { min: f64, max: f64 },

    #[error("point {coordinate} outside the domain along axis {axis}")]
    OutOfDomain { axis: usize, coordinate: f64 },

    #[error("benchmark failure: {0}")]
    BenchFailure(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig { .. } => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
