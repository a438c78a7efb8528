use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Variants fall into two families: input validation failures (bad rasters, malformed
/// manifests, contract violations on values) and runtime failures (I/O, external commands).
/// [`Error::is_validation`] tells them apart; the CLI maps them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what}: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        what: String,
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("illegal raster value {value} at (x={x}, y={y}) in {what}")]
    IllegalValue {
        what: String,
        x: usize,
        y: usize,
        value: u8,
    },

    #[error("{count} illegal raster value(s) in {what}, first at {}", first_locations(.pixels))]
    IllegalValues {
        what: String,
        count: usize,
        /// The first few offending pixels as (x, y, value).
        pixels: Vec<(usize, usize, u8)>,
    },

    #[error("invalid class set: {0}")]
    ClassSet(String),

    #[error("soft prediction at (x={x}, y={y}) sums to {sum} (tolerance {tolerance})")]
    Normalization {
        x: usize,
        y: usize,
        sum: f64,
        tolerance: f64,
    },

    #[error("non-finite or negative soft prediction value at (x={x}, y={y}, c={channel})")]
    BadProbability { x: usize, y: usize, channel: usize },

    #[error("threshold {theta} outside [{min}, 1]")]
    ThresholdOutOfRange { theta: f64, min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty evaluation: no class has a defined score")]
    EmptyEvaluation,

    #[error("empty reference set")]
    EmptyReferences,

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("manifest {path} line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("external command `{command}` failed with {status}\n{diagnostics}")]
    Command {
        command: String,
        status: String,
        diagnostics: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dims(what: impl Into<String>, expected: (usize, usize), got: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected_w: expected.0,
            expected_h: expected.1,
            got_w: got.0,
            got_h: got.1,
        }
    }

    /// True for errors caused by invalid input data rather than by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Command { .. })
    }
}

fn first_locations(pixels: &[(usize, usize, u8)]) -> String {
    pixels
        .iter()
        .take(8)
        .map(|(x, y, v)| format!("(x={x}, y={y}): {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
