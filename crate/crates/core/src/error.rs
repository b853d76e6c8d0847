use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand extents do not conform.
    #[error("shape error: {0}")]
    Shape(String),
    /// A parameter lies outside its valid range (mode, rank, truncation level, ...).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Non-finite data or a factorization that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The quantity is undefined for this input, e.g. a relative error of a zero tensor.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Malformed volume or model file.
    #[error("parse error at byte {offset}: {kind}")]
    Parse { offset: u64, kind: ParseErrorKind },
    /// A run inside a multi-seed study failed.
    #[error("run with seed {seed} failed: {source}")]
    Study { seed: u64, source: Box<Error> },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    BadMagic([u8; 4]),
    UnsupportedVersion(u16),
    UnknownDtype(u16),
    UnknownMethod(u16),
    ZeroExtent,
    Truncated { expected: u64, found: u64 },
    TrailingBytes(u64),
    NonFinite,
    /// Redundant fields that disagree with each other.
    Inconsistent(String),
    Csv(String),
    MissingColumn(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::BadMagic(m) => write!(f, "bad magic {:?}", String::from_utf8_lossy(m)),
            ParseErrorKind::UnsupportedVersion(v) => write!(f, "unsupported format version {v}"),
            ParseErrorKind::UnknownDtype(d) => write!(f, "unknown dtype code {d}"),
            ParseErrorKind::UnknownMethod(m) => write!(f, "unknown method code {m}"),
            ParseErrorKind::ZeroExtent => write!(f, "zero tensor extent"),
            ParseErrorKind::Truncated { expected, found } => {
                write!(f, "truncated payload: expected {expected} bytes, found {found}")
            }
            ParseErrorKind::TrailingBytes(n) => write!(f, "{n} trailing bytes after payload"),
            ParseErrorKind::NonFinite => write!(f, "non-finite value in payload"),
            ParseErrorKind::Inconsistent(msg) => write!(f, "inconsistent payload: {msg}"),
            ParseErrorKind::Csv(msg) => write!(f, "malformed csv: {msg}"),
            ParseErrorKind::MissingColumn(c) => write!(f, "missing column `{c}`"),
        }
    }
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn parse(offset: u64, kind: ParseErrorKind) -> Self {
        Error::Parse { offset, kind }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind_str(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Argument(_) => "argument",
            Error::Numeric(_) => "numeric",
            Error::Degenerate(_) => "degenerate",
            Error::Parse { .. } => "parse",
            Error::Study { source, .. } => source.kind_str(),
            Error::Io(_) => "io",
        }
    }
}
