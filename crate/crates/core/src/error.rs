use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage named in errors surfaced by the end-to-end comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    LoadReference,
    LoadDistorted,
    Pdf,
    Mfs,
    Hdif,
    Weighting,
    Ssim,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::LoadReference => "load reference",
            Stage::LoadDistorted => "load distorted",
            Stage::Pdf => "pdf",
            Stage::Mfs => "mfs",
            Stage::Hdif => "hdif",
            Stage::Weighting => "weighting",
            Stage::Ssim => "ssim",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported image format for {}: {reason}", path.display())]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("failed to decode {}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("histogram bin counts differ ({left} vs {right})")]
    BinCountMismatch { left: usize, right: usize },

    #[error("image {height}x{width} is too small (minimum dimension {min})")]
    ImageTooSmall { height: usize, width: usize, min: usize },

    #[error("feature extractor input {height}x{width} is too small (minimum dimension {min})")]
    InputTooSmall { height: usize, width: usize, min: usize },

    #[error("failed to load model: {0}")]
    ModelLoad(String),

    #[error("feature extraction failed: {0}")]
    Inference(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("manifest parse error at line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    #[error("missing files: {}", display_paths(.0))]
    MissingFile(Vec<PathBuf>),

    #[error("no records")]
    NoRecords,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage { stage, source: Box::new(source) }
    }

    /// True when the error stems from user input (bad paths, files, flags or
    /// datasets) rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_input_error(),
            Error::Inference(_) | Error::ShapeMismatch(_) | Error::Io(_) => false,
            _ => true,
        }
    }
}

fn display_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
}
