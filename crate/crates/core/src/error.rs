use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("frame is entirely black, no content box")]
    AllBlackFrame,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image size mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    SizeMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("classifier backend failure: {0}")]
    BackendFailure(String),

    #[error("length mismatch: {pred} predictions vs {truth} ground-truth items")]
    LengthMismatch { pred: usize, truth: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error(
        "prediction/annotation alignment failed: missing in predictions {missing_in_pred:?}, \
         missing in annotations {missing_in_truth:?}"
    )]
    Alignment {
        missing_in_pred: Vec<u64>,
        missing_in_truth: Vec<u64>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
