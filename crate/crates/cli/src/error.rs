use ballistic_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

use crate::machine_file::ParseError;

/// Exit-code classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// The analysis ran and the answer is negative.
    Verdict,
    /// Bad arguments, files or parameters.
    Input,
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Verdict => 1,
            ErrorClass::Input => 2,
            ErrorClass::Internal => 3,
        }
    }
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Input, message)
    }

    pub fn verdict(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Verdict, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Internal, message)
    }

    fn new(class: ErrorClass, message: impl Into<String>) -> Self {
        Self {
            class,
            message: message.into(),
            line: None,
            column: None,
        }
    }

    /// Prefixes the message with where the error came from.
    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    /// The payload written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = serde_json::json!({
            "class": self.class,
            "exit_code": self.class.exit_code(),
            "message": self.message,
        });
        if let (Some(line), Some(column)) = (self.line, self.column) {
            body["line"] = line.into();
            body["column"] = column.into();
        }
        serde_json::json!({ "error": body })
    }
}

pub fn classify(e: &CoreError) -> ErrorClass {
    match e {
        CoreError::Range { .. }
        | CoreError::DimensionMismatch { .. }
        | CoreError::NotUnitary { .. }
        | CoreError::InvalidParameter(_)
        | CoreError::DenseCapExceeded { .. } => ErrorClass::Input,
        CoreError::Precondition(_)
        | CoreError::Distinctness { .. }
        | CoreError::NormViolation { .. }
        | CoreError::PpiViolation { .. }
        | CoreError::Decomposition(_)
        | CoreError::NonBallistic { .. }
        | CoreError::NotHermitian { .. }
        | CoreError::NotPsd { .. } => ErrorClass::Verdict,
        CoreError::Inconsistent { .. } | CoreError::Construction(_) => ErrorClass::Internal,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        Self::new(classify(&e), e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        Self {
            class: ErrorClass::Input,
            line: Some(e.line),
            column: Some(e.column),
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
