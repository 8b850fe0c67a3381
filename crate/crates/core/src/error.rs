use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied a value outside the operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// Gram-Schmidt met a (numerically) dependent column.
    #[error("degenerate input: column {column} has residual norm {norm:e} below {threshold:e}")]
    Degenerate {
        column: usize,
        norm: f64,
        threshold: f64,
    },

    #[error("cannot parse init method `{input}`: {reason}")]
    InitParse { input: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: bad {field} (expected {expected:#010x}, found {found:#010x})", path.display())]
    IdxMagic {
        path: PathBuf,
        field: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{}: truncated file, {detail}", path.display())]
    IdxTruncated { path: PathBuf, detail: String },

    #[error("count mismatch: {images} images but {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("{}: missing column `{column}`", path.display())]
    CsvMissingColumn { path: PathBuf, column: String },

    #[error("{}: row {row}, column `{column}`: cannot parse `{value}` as a number", path.display())]
    CsvValue {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// Training produced a NaN/Inf loss.
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
