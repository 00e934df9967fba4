use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image dimensions {width}x{height} are not divisible by {step}")]
    NotDivisible {
        width: usize,
        height: usize,
        step: usize,
    },

    #[error("unsupported block step {0} (expected 2, 3 or 4)")]
    UnsupportedStep(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic in .lab stream")]
    BadMagic,

    #[error("unsupported .lab version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated .lab stream")]
    Truncated,

    #[error("invalid .lab header: {0}")]
    InvalidHeader(String),

    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: {field}={value} is out of range ({expected})")]
    Range {
        line: usize,
        field: String,
        value: String,
        expected: String,
    },

    #[error("pipeline: {0}")]
    Pipeline(String),

    #[error("parameter matrix row {row}: {message}")]
    Matrix { row: usize, message: String },

    #[error("wavelet filter {name}: {message}")]
    Filter { name: String, message: String },

    #[error("search: {0}")]
    Search(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}
