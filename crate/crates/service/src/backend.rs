//! Choice of command interpreter for a round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Grammar,
    RemoteModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpreterBackend {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

impl Default for InterpreterBackend {
    fn default() -> Self {
        InterpreterBackend { kind: BackendKind::Grammar, endpoint: None, timeout: DEFAULT_TIMEOUT_S }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("remote_model backend requires an endpoint")]
    MissingEndpoint,
    #[error("timeout must be positive")]
    BadTimeout,
    #[error("this build has no remote interpreter (enable the `remote` feature)")]
    Unavailable,
}

impl InterpreterBackend {
    pub fn remote(endpoint: &str, timeout: f64) -> Self {
        InterpreterBackend { kind: BackendKind::RemoteModel, endpoint: Some(endpoint.to_string()), timeout }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(BackendError::BadTimeout);
        }
        if self.kind == BackendKind::RemoteModel && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err(BackendError::MissingEndpoint);
        }
        Ok(())
    }
}
