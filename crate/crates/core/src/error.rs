use std::path::PathBuf;

/// Errors produced anywhere in the selection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty manifest: {0}")]
    EmptyManifest(PathBuf),

    #[error("duplicate sample id \"{id}\" (lines {first_line} and {line})")]
    DuplicateId {
        id: String,
        first_line: usize,
        line: usize,
    },

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("unsupported pixel format in {path}: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },

    #[error("sample \"{0}\" has no mask path")]
    MissingMask(String),

    #[error("{path}: expected {expected} rows, found {found}")]
    RowCount {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row} has id \"{found}\", manifest expects \"{expected}\"")]
    IdMismatch {
        path: PathBuf,
        row: usize,
        expected: String,
        found: String,
    },

    #[error("sample \"{id}\": {path} is not a JPEG; stored-size scoring requires JPEG sources")]
    NotJpeg { id: String, path: PathBuf },

    #[error("sample \"{id}\": {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("JPEG encoding failed: {0}")]
    Encode(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("label {label} at pixel offset {offset} is out of range for {num_classes} classes")]
    LabelOutOfRange {
        label: u32,
        offset: usize,
        num_classes: usize,
    },

    #[error("mask has no counted pixels (every pixel carries the ignore index)")]
    EmptyHistogram,

    #[error("all retained edge distances are zero; the median bandwidth is undefined, pass a fixed sigma")]
    DegenerateBandwidth,

    #[error("missing input: {0}")]
    MissingInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_sample(self, id: &str) -> Self {
        Error::Sample {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    /// Short stable identifier used in single-line CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::EmptyManifest(_) => "empty-manifest",
            Error::DuplicateId { .. } => "duplicate-id",
            Error::Decode { .. } => "decode",
            Error::UnsupportedFormat { .. } => "unsupported-format",
            Error::MissingMask(_) => "missing-mask",
            Error::RowCount { .. } => "row-count",
            Error::IdMismatch { .. } => "id-mismatch",
            Error::NotJpeg { .. } => "not-jpeg",
            Error::Sample { source, .. } => source.kind(),
            Error::Encode(_) => "encode",
            Error::NonFinite(_) => "non-finite",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::LabelOutOfRange { .. } => "label-out-of-range",
            Error::EmptyHistogram => "empty-histogram",
            Error::DegenerateBandwidth => "degenerate-bandwidth",
            Error::MissingInput(_) => "missing-input",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
