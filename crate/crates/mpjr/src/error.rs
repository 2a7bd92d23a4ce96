use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("non-finite value at grid index ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("interface law parameterization: {0}")]
    LawParams(String),

    #[error("mesh construction: {0}")]
    Mesh(String),

    #[error("interface layer: {0}")]
    InterfaceLayer(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(
        "step to u_bar = {u_bar:.6e} failed after substep depth {depth}: residual {residual:.3e}"
    )]
    StepFailure {
        u_bar: f64,
        depth: usize,
        residual: f64,
    },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
