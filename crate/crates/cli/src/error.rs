use std::fmt;

/// A failure reported as one line, `error[CODE]: message`, with a distinct
/// exit status per code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Config,
    Io,
    NoFixedPoints,
    InvalidInput,
    TrainingDiverged,
    PathNotConverged,
    AllCensored,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Config => "CONFIG",
            ErrorCode::Io => "IO",
            ErrorCode::NoFixedPoints => "NO_FIXED_POINTS",
            ErrorCode::InvalidInput => "INVALID_INPUT",
            ErrorCode::TrainingDiverged => "TRAINING_DIVERGED",
            ErrorCode::PathNotConverged => "PATH_NOT_CONVERGED",
            ErrorCode::AllCensored => "ALL_CENSORED",
            ErrorCode::Internal => "INTERNAL",
        }
    }

    pub fn exit_status(self) -> i32 {
        match self {
            ErrorCode::Config => 2,
            ErrorCode::Io => 3,
            ErrorCode::NoFixedPoints => 4,
            ErrorCode::InvalidInput => 5,
            ErrorCode::TrainingDiverged => 6,
            ErrorCode::PathNotConverged => 7,
            ErrorCode::AllCensored => 8,
            ErrorCode::Internal => 70,
        }
    }
}

impl CliError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: String) -> Self {
        Self::new(ErrorCode::Config, message)
    }

    pub fn io(message: String) -> Self {
        Self::new(ErrorCode::Io, message)
    }

    pub fn invalid(message: String) -> Self {
        Self::new(ErrorCode::InvalidInput, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {one_line}", self.code.as_str())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<quasipot::characteristics::CharacteristicsError> for CliError {
    fn from(e: quasipot::characteristics::CharacteristicsError) -> Self {
        use quasipot::characteristics::CharacteristicsError as E;
        match e {
            E::Io(e) => Self::io(e.to_string()),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<quasipot::net::NetError> for CliError {
    fn from(e: quasipot::net::NetError) -> Self {
        match e {
            quasipot::net::NetError::Io(e) => Self::io(e.to_string()),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<quasipot::trainer::TrainError> for CliError {
    fn from(e: quasipot::trainer::TrainError) -> Self {
        use quasipot::trainer::TrainError as E;
        match e {
            E::Diverged { .. } => Self::new(ErrorCode::TrainingDiverged, e.to_string()),
            E::InvalidConfig(m) => Self::config(m),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<quasipot::path::PathError> for CliError {
    fn from(e: quasipot::path::PathError) -> Self {
        use quasipot::path::PathError as E;
        match e {
            E::NotConverged { .. } => Self::new(ErrorCode::PathNotConverged, e.to_string()),
            E::Io(e) => Self::io(e.to_string()),
            other => Self::invalid(other.to_string()),
        }
    }
}

impl From<quasipot::control::ControlError> for CliError {
    fn from(e: quasipot::control::ControlError) -> Self {
        use quasipot::control::ControlError as E;
        let code = match &e {
            E::AllCensored { .. } => ErrorCode::AllCensored,
            E::Incomplete { cause, .. } if matches!(**cause, E::AllCensored { .. }) => {
                ErrorCode::AllCensored
            }
            E::InvalidParameter(_) => ErrorCode::Config,
            _ => ErrorCode::InvalidInput,
        };
        Self::new(code, e.to_string())
    }
}

impl From<quasipot::dynamics::DynamicsError> for CliError {
    fn from(e: quasipot::dynamics::DynamicsError) -> Self {
        Self::invalid(e.to_string())
    }
}
