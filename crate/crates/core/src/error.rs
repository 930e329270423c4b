use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dry state: h = {h:e} is below h_min = {h_min:e}{}", location(*.cell, *.stage))]
    DryState {
        h: f64,
        h_min: f64,
        cell: Option<usize>,
        stage: Option<usize>,
    },

    #[error("Boussinesq coefficient undefined for u_m = 0")]
    UndefinedBeta,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("root solve did not converge in bracket [{lo}, {hi}] after {iterations} iterations")]
    RootSolve { lo: f64, hi: f64, iterations: usize },

    #[error("eigenvalue iteration for a {dim}x{dim} matrix did not converge in {iterations} iterations")]
    EigenSolve { dim: usize, iterations: usize },

    #[error("mesh alignment: {0}")]
    MeshAlignment(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn location(cell: Option<usize>, stage: Option<usize>) -> String {
    match (cell, stage) {
        (Some(c), Some(s)) => format!(" (cell {c}, stage {s})"),
        (Some(c), None) => format!(" (cell {c})"),
        (None, Some(s)) => format!(" (stage {s})"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Attach a cell index and RK stage to a dry-state error.
    pub fn at(self, cell_index: usize, rk_stage: usize) -> Self {
        match self {
            Error::DryState { h, h_min, .. } => Error::DryState {
                h,
                h_min,
                cell: Some(cell_index),
                stage: Some(rk_stage),
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
