use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the codesign library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("design coordinate must be strictly positive, got ({pv_kwp}, {battery_kwh})")]
    Domain { pv_kwp: f64, battery_kwh: f64 },

    #[error("length mismatch: {designs} designs but {returns} returns")]
    LengthMismatch { designs: usize, returns: usize },

    #[error("expected 8760 rows, got {0}")]
    RowCount(usize),

    #[error("row {row}: non-numeric value {value:?} in column {column}")]
    NonNumeric {
        row: usize,
        column: &'static str,
        value: String,
    },

    #[error("row {row}: {column} = {value} is out of range {range}")]
    OutOfRange {
        row: usize,
        column: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("row {row}: hour_of_year {found} does not match expected {expected}")]
    HourIndex {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: expected 3 columns, got {found}")]
    ColumnCount { row: usize, found: usize },

    #[error("malformed header {0:?}, expected \"hour_of_year,normalized_pv,load_kw\"")]
    Header(String),

    #[error("horizon {horizon} exceeds split length {available} hours")]
    HorizonTooLong { horizon: usize, available: usize },

    #[error("unknown {kind} {name:?} (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
