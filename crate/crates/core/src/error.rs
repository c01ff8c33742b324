use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid voxel field: {0}")]
    InvalidField(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("pixel ({px}, {py}) outside {width}x{height} image")]
    PixelOutOfRange {
        px: u32,
        py: u32,
        width: u32,
        height: u32,
    },
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("empty object field")]
    EmptyObjectField,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("no background pixels")]
    NoBackgroundPixels,
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("unknown editor kind {0:?}")]
    UnknownEditor(String),
    #[error("invalid editor parameters: {0}")]
    InvalidEditorParams(String),
    #[error("primitive {index} extends outside the scene bounds")]
    PrimitiveOutOfBounds { index: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("editing failed: {0}")]
    Editor(String),
    /// A remote editing or inpainting service failed; raised by
    /// out-of-process editor implementations.
    #[error("remote service: {0}")]
    Remote(String),
    #[error("segmentation failed: {0}")]
    Segmenter(String),
    #[error("viewpoint {view}: {source}")]
    ViewFailed {
        view: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {field}: {message}")]
    Parse {
        file: String,
        field: String,
        message: String,
    },
    #[error("image codec error in {}: {message}", path.display())]
    Codec { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        file: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            file: file.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}
