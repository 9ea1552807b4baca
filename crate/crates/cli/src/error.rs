use gext_core::Error as CoreError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source_name}:{line}:{column}: {message}")]
    Parse { source_name: String, line: usize, column: usize, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Refused(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Refused(e)
    }
}

fn innermost(e: &CoreError) -> (&CoreError, Option<usize>) {
    match e {
        CoreError::Iteration { index, source } => (innermost(source).0, Some(*index)),
        other => (other, None),
    }
}

fn kind(e: &CoreError) -> &'static str {
    match e {
        CoreError::InvalidGroup(_) => "InvalidGroup",
        CoreError::InvalidSystem(_) => "InvalidSystem",
        CoreError::OutOfDomain { .. } => "OutOfDomain",
        CoreError::SpaceMismatch => "SpaceMismatch",
        CoreError::PositionOutOfRange { .. } => "PositionOutOfRange",
        CoreError::DomainTooSmall { .. } => "DomainTooSmall",
        CoreError::AtomTooSmall { .. } => "AtomTooSmall",
        CoreError::PreconditionViolated(_) => "PreconditionViolated",
        CoreError::InfeasibleTemplate(_) => "InfeasibleTemplate",
        CoreError::TooFar { .. } => "TooFar",
        CoreError::TooShort { .. } => "TooShort",
        CoreError::Collision { .. } => "Collision",
        CoreError::Infeasible(_) => "Infeasible",
        CoreError::NotMultiple { .. } => "NotMultiple",
        CoreError::HypothesisDistance { .. } => "HypothesisDistance",
        CoreError::ScheduleInfeasible(_) => "ScheduleInfeasible",
        CoreError::NotRegular(_) => "NotRegular",
        CoreError::NotReachable { .. } => "NotReachable",
        CoreError::TowerInfeasible { .. } => "TowerInfeasible",
        CoreError::GeneratorCheckFailed { .. } => "GeneratorCheckFailed",
        CoreError::NoGoodOrbit { .. } => "NoGoodOrbit",
        CoreError::Iteration { .. } => "Iteration",
    }
}

impl CliError {
    /// 3 parse, 4 validation, 5 I/O, 10.. module refusals (see the README).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 3,
            CliError::Validation(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Refused(e) => match innermost(e).0 {
                CoreError::HypothesisDistance { .. } => 10,
                CoreError::NotRegular(_) => 11,
                CoreError::ScheduleInfeasible(_) => 12,
                CoreError::Infeasible(_) | CoreError::TowerInfeasible { .. } => 13,
                CoreError::NotReachable { .. } => 14,
                CoreError::GeneratorCheckFailed { .. } => 15,
                CoreError::NoGoodOrbit { .. } => 16,
                CoreError::SpaceMismatch => 17,
                _ => 19,
            },
        }
    }

    /// The refusal file body.
    pub fn to_json(&self) -> Value {
        match self {
            CliError::Parse { source_name, line, column, message } => json!({
                "error": "ParseError", "file": source_name, "line": line, "column": column, "message": message,
            }),
            CliError::Validation(m) => json!({ "error": "ValidationError", "message": m }),
            CliError::Io { path, message } => json!({ "error": "Io", "path": path, "message": message }),
            CliError::Refused(e) => {
                let (inner, iteration) = innermost(e);
                let mut v = json!({
                    "error": kind(inner),
                    "message": inner.to_string(),
                    "iteration": iteration,
                    "exit_code": self.exit_code(),
                });
                match inner {
                    CoreError::HypothesisDistance { measured, bound } => {
                        v["measured"] = json!(measured);
                        v["bound"] = json!(bound);
                    }
                    CoreError::NotRegular(r) => {
                        v["condition"] = json!(r.condition);
                        v["measured"] = json!(r.measured);
                    }
                    _ => {}
                }
                v
            }
        }
    }
}
