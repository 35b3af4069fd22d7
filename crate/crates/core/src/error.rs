use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not conform.
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    /// Input too small or empty for the requested statistic.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed container (IDX, PGM, checkpoint, manifest, CSV).
    #[error("format error: {0}")]
    Format(String),

    /// Payload shorter than its header promises.
    #[error("truncated input: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("unsupported image shape {rows}x{cols} (expected 28x28)")]
    UnsupportedShape { rows: usize, cols: usize },

    /// A value outside its permitted domain, e.g. a label byte > 9.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rectangle out of bounds: {0}")]
    Bounds(String),

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: impl Into<String>, rhs: impl Into<String>) -> Self {
        Error::Shape {
            op,
            lhs: lhs.into(),
            rhs: rhs.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
