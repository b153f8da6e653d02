use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the factorization pipeline.
#[derive(Debug, Error)]
pub enum CssnmfError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("Lipschitz constant is zero (input matrix is zero)")]
    ZeroLipschitz,

    #[error("rank-deficient input: residual vanished after {picked} of {requested} selections")]
    RankDeficient { picked: usize, requested: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("column {0} of the basis is zero")]
    ZeroColumn(usize),

    #[error("index {index} should belong to a pure set (mixing coefficient {value} >= 1)")]
    MixingTooLarge { index: usize, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed matrix data: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CssnmfError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CssnmfError::Io {
            path: path.into(),
            source,
        }
    }
}

impl CssnmfError {
    /// Process exit status: 2 for bad arguments, 3 for bad input data, 4
    /// for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use CssnmfError::*;
        match self {
            InvalidArgument(_) => 2,
            Dimension(_) | NonPositiveWeight { .. } | Parse(_) | Io { .. } | Csv(_) | Json(_) => 3,
            NotSymmetric { .. }
            | ZeroLipschitz
            | RankDeficient { .. }
            | EmptyCluster(_)
            | ZeroColumn(_)
            | MixingTooLarge { .. }
            | Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CssnmfError>;
