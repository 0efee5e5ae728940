use std::fmt;
use std::process::ExitCode;

use moran_core::dimension::DimensionError;
use moran_core::geometry::GeometryError;
use moran_core::scale::ScaleError;
use moran_core::spec_model::SpecFileError;
use moran_core::symbolic::SymbolicError;

/// Exit statuses; `0` is success.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Io = 1,
    Usage = 2,
    Parse = 3,
    Validation = 4,
    Budget = 5,
    Compute = 6,
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Status::Usage, message)
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Status::Io, e.to_string())
    }
}

impl From<SpecFileError> for CliError {
    fn from(e: SpecFileError) -> Self {
        let status = match e {
            SpecFileError::Io { .. } => Status::Io,
            _ => Status::Parse,
        };
        Self::new(status, e.to_string())
    }
}

impl From<DimensionError> for CliError {
    fn from(e: DimensionError) -> Self {
        let status = match e {
            DimensionError::InvalidSpec(_) | DimensionError::NonUniformLevel { .. } => Status::Validation,
            DimensionError::BadOption(_) | DimensionError::EmptyWindow { .. } => Status::Usage,
            DimensionError::Bracket { .. } => Status::Compute,
        };
        Self::new(status, e.to_string())
    }
}

impl From<SymbolicError> for CliError {
    fn from(e: SymbolicError) -> Self {
        match e {
            SymbolicError::Budget { .. } => Self::new(Status::Budget, e.to_string()),
            SymbolicError::Dimension(d) => d.into(),
            _ => Self::usage(e.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        let status = match e {
            GeometryError::Symbolic(s) => return s.into(),
            GeometryError::Budget { .. } => Status::Budget,
            GeometryError::BadPlacement(_) | GeometryError::BadGrid(_) => Status::Usage,
            GeometryError::BadIntervals(_) => Status::Parse,
            GeometryError::Infeasible { .. } | GeometryError::NotOneDimensional(_) => Status::Validation,
            GeometryError::Io(_) | GeometryError::Csv(_) => Status::Io,
        };
        Self::new(status, e.to_string())
    }
}

impl From<ScaleError> for CliError {
    fn from(e: ScaleError) -> Self {
        let status = match e {
            ScaleError::BadPieces(_) => Status::Parse,
            ScaleError::OutOfRange { .. } => Status::Compute,
            ScaleError::BadArgument(_) => Status::Usage,
            ScaleError::NonUniformLevel { .. } => Status::Validation,
            ScaleError::Io(_) | ScaleError::Csv(_) => Status::Io,
        };
        Self::new(status, e.to_string())
    }
}
