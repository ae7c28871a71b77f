use std::fmt;
use std::path::Path;

use phc_core::bandsweep::SweepError;
use phc_core::cellgen::CellError;
use phc_core::dataset::DatasetError;
use phc_core::metrics::MetricError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Compute,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Compute => 3,
            ErrorKind::Io => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn compute(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Compute,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: ErrorKind,
            exit_code: i32,
            message: &'a str,
        }
        serde_json::to_string(&Payload {
            error: self.kind,
            exit_code: self.kind.exit_code(),
            message: &self.message,
        })
        .expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let kind = match e {
            DatasetError::Inconsistent { .. } | DatasetError::BadMeta(_) | DatasetError::Split(_) => ErrorKind::Config,
            _ => ErrorKind::Io,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<CellError> for CliError {
    fn from(e: CellError) -> Self {
        match e {
            CellError::GenerationFailed { .. } => Self::compute(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::BadResolution(_) | SweepError::NoResolutions | SweepError::NoWorkers => {
                Self::config(e.to_string())
            }
            _ => Self::compute(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::AllExcluded(_) => Self::compute(e.to_string()),
            _ => Self::config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
