use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("non-finite sample at flat index {0}")]
    NonFinite(usize),

    #[error("function arity {arity} does not match {ndim}-dimensional grid")]
    ArityMismatch { arity: usize, ndim: usize },

    #[error("ROI {name:?} [{r0},{r1})x[{c0},{c1}) outside {height}x{width} slice")]
    RoiOutOfBounds {
        name: String,
        r0: usize,
        r1: usize,
        c0: usize,
        c1: usize,
        height: usize,
        width: usize,
    },

    #[error("index {index} out of range for axis of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("axis length {len} not divisible by 2^{levels}")]
    NonDyadic { len: usize, levels: usize },

    #[error("inconsistent wavelet decomposition: {0}")]
    InconsistentDecomposition(String),

    #[error("region mean is zero; ratio metric undefined")]
    ZeroMeanRegion,

    #[error("speckle index of the original region is zero; SSI undefined")]
    ZeroSIOriginal,

    #[error("ENL undefined for a region with zero mean and zero variance")]
    UndefinedEnl,

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the metric degeneracies (zero mean / zero variance regions).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::ZeroMeanRegion | Error::ZeroSIOriginal | Error::UndefinedEnl
        )
    }

    /// Process exit code used by the CLI: 2 for configuration and argument
    /// errors, 3 for numeric degeneracy, 1 for I/O and file format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            e if e.is_degenerate() => 3,
            Error::Io(_) | Error::Format(_) => 1,
            _ => 2,
        }
    }
}
