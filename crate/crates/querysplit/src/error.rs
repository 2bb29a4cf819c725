//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{0}` in report header")]
    MissingColumn(String),

    #[error("empty graph: no edges survived parsing and aggregation")]
    EmptyGraph,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("more clusters than vertices: k={k}, |V|={n}")]
    MoreClustersThanVertices { k: usize, n: usize },

    #[error("panel cell {arm}/{period} has no observations")]
    EmptyCell { arm: String, period: String },

    #[error("insufficient clusters for cluster-robust inference: {arm} arm has {got}, need >= 2")]
    InsufficientClusters { arm: String, got: usize },

    #[error("duplicate panel observation for cluster `{cluster}` in period {period}")]
    DuplicateObservation { cluster: String, period: String },

    #[error("cluster `{0}` appears in both arms")]
    InconsistentArm(String),

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error(
        "spend matching failed after {attempts} attempts: best gap {best_gap:.6} > tolerance {tolerance:.6}"
    )]
    SpendMatchFailed {
        attempts: usize,
        best_gap: f64,
        tolerance: f64,
    },

    #[error("input file not found: {0}")]
    MissingInput(String),

    #[error("malformed {what} at {path}:{line}: {msg}")]
    MalformedArtifact {
        what: &'static str,
        path: String,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("TOML parse error in {path}: {msg}")]
    Toml { path: String, msg: String },
}

impl Error {
    /// Stable machine-readable tag for the error JSON emitted by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "missing_column",
            Error::EmptyGraph => "empty_graph",
            Error::Config(_) => "config",
            Error::MoreClustersThanVertices { .. } => "more_clusters_than_vertices",
            Error::EmptyCell { .. } => "empty_cell",
            Error::InsufficientClusters { .. } => "insufficient_clusters",
            Error::DuplicateObservation { .. } => "duplicate_observation",
            Error::InconsistentArm(_) => "inconsistent_arm",
            Error::SingularDesign(_) => "singular_design",
            Error::SpendMatchFailed { .. } => "spend_match_failed",
            Error::MissingInput(_) => "missing_input",
            Error::MalformedArtifact { .. } => "malformed_artifact",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Toml { .. } => "toml",
        }
    }

    /// Path associated with the error, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            Error::MissingInput(p) => Some(p),
            Error::MalformedArtifact { path, .. } => Some(path),
            Error::Io { path, .. } => Some(path),
            Error::Toml { path, .. } => Some(path),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Attach a path to a raw `std::io::Error`.
pub fn io_err(path: impl Into<String>, source: std::io::Error) -> Error {
    Error::Io {
        path: path.into(),
        source,
    }
}
