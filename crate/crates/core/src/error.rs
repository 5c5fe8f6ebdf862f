use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which way a prompt is being pushed through a segmenter.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Forward => f.write_str("forward"),
            Direction::Reverse => f.write_str("reverse"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("patch {patch_w}x{patch_h} does not fit inside {query_w}x{query_h} query")]
    PatchLargerThanQuery {
        patch_w: usize,
        patch_h: usize,
        query_w: usize,
        query_h: usize,
    },

    #[error("support mask has no foreground pixels")]
    EmptySupportMask,

    #[error("no scripted {direction} entry for pair `{pair_id}`")]
    MissingScript {
        pair_id: String,
        direction: Direction,
    },

    #[error("segmenter kind `{0}` is not supported in core")]
    UnsupportedSegmenter(String),

    #[error("pair `{pair_id}` stage {stage}: {source}")]
    Stage {
        pair_id: String,
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config {path}:{line}: field `{field}`: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("pair `{pair_id}`: {source}")]
    Pair {
        pair_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("pair `{pair_id}`: positive pair has no gt_mask_path")]
    MissingGroundTruth { pair_id: String },

    #[error("pair `{pair_id}`: missing file {path}")]
    MissingFile { pair_id: String, path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    pub fn dims(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_w: left.0,
            left_h: left.1,
            right_w: right.0,
            right_h: right.1,
        }
    }

    pub fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a pair id to an error that does not already carry one.
    pub fn for_pair(self, pair_id: &str) -> Self {
        match self {
            e @ (Error::Pair { .. }
            | Error::MissingFile { .. }
            | Error::MissingGroundTruth { .. }
            | Error::Stage { .. }) => e,
            other => Error::Pair {
                pair_id: pair_id.to_string(),
                source: Box::new(other),
            },
        }
    }

    /// Process exit code: 1 validation, 2 IO, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::MissingFile { .. } | Error::Decode { .. } => 2,
            Error::Internal(_) => 3,
            Error::Stage { source, .. } | Error::Pair { source, .. } => source.exit_code(),
            _ => 1,
        }
    }

    /// Short machine-parseable category used as the diagnostic prefix.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            1 => "validation",
            2 => "io",
            _ => "internal",
        }
    }
}
