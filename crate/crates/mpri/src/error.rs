//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sample must have at least one point and one dimension")]
    EmptySample,

    #[error("image dimensions must all be positive")]
    EmptyImage,

    #[error("label map contains no labeled pixels")]
    NoLabeledPixels,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sample shape mismatch: {left_n}x{left_p} vs {right_n}x{right_p}")]
    ShapeMismatch {
        left_n: usize,
        left_p: usize,
        right_n: usize,
        right_p: usize,
    },

    #[error("kernel width must be a positive finite real, got {0}")]
    InvalidKernelWidth(f64),

    #[error("beta must be a nonnegative finite real, got {0}")]
    InvalidBeta(f64),

    #[error("kernel sum over the reference sample underflowed for point {point}; the point is too far from every reference point at this kernel width")]
    DenominatorUnderflow { point: usize },

    #[error("window width must be odd, got {0}")]
    EvenWindowWidth(usize),

    #[error("window width {width} exceeds the mirror-padding limit {limit} for a {rows}x{cols} image")]
    WindowTooWide {
        width: usize,
        limit: usize,
        rows: usize,
        cols: usize,
    },

    #[error("pixel ({row}, {col}) out of bounds for {rows}x{cols} image")]
    PixelOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("every dimension of the sample is constant; kernel width rule is undefined")]
    ConstantSample,

    #[error("need at least 2 distinct classes in the training labels, got {0}")]
    TooFewClasses(usize),

    #[error("within-class scatter is singular; refit with shrinkage gamma > 0")]
    SingularScatter,

    #[error("requested projection dimension {requested} exceeds the LDA maximum {max}")]
    ProjectionDimension { requested: usize, max: usize },

    #[error("no test pixels to evaluate")]
    EmptyTestSet,

    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path} at byte {offset}: {message}")]
    Format {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("{path} line {line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{stage} failed")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, offset: u64, message: impl Into<String>) -> Error {
        Error::Format {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }
}
