//! Client for an external language-model interpreter.
//!
//! The request carries the prompt, the command and the response schema; the
//! response must be a config document that passes the same validation as the
//! grammar's output. Invalid documents are rejected as a whole.

use std::time::Duration;

use drivesim_core::dsl::wire::{configs_from_wire_str, wire_request, WireError, DEFAULT_PROMPT};
use drivesim_core::scene::EditConfig;
use thiserror::Error;

use crate::backend::{BackendError, BackendKind, InterpreterBackend};

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("interpreter did not answer within {0:?}")]
    Timeout(Duration),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("interpreter answered HTTP {0}")]
    Status(u16),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[derive(Clone, Debug)]
pub struct RemoteInterpreter {
    client: reqwest::Client,
    endpoint: String,
    timeout: Duration,
    pub prompt: String,
}

impl RemoteInterpreter {
    pub fn new(backend: &InterpreterBackend) -> Result<Self, RemoteError> {
        backend.validate()?;
        if backend.kind != BackendKind::RemoteModel {
            return Err(BackendError::MissingEndpoint.into());
        }
        let timeout = Duration::from_secs_f64(backend.timeout);
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .connect_timeout(timeout)
            .build()
            .map_err(|e| RemoteError::Transport(e.to_string()))?;
        Ok(RemoteInterpreter {
            client,
            endpoint: backend.endpoint.clone().unwrap_or_default(),
            timeout,
            prompt: DEFAULT_PROMPT.to_string(),
        })
    }

    /// Sends one command and validates the answer. Requests are independent,
    /// so one client may serve many sessions at once.
    pub async fn interpret(&self, command: &str, round: u32) -> Result<Vec<EditConfig>, RemoteError> {
        let body = serde_json::to_vec(&wire_request(&self.prompt, command, round)).expect("request serializes");
        let send = self
            .client
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .body(body)
            .send();
        // the client timeout covers the transfer; this bounds the whole exchange
        let resp = tokio::time::timeout(self.timeout, send)
            .await
            .map_err(|_| RemoteError::Timeout(self.timeout))?
            .map_err(|e| self.transport(e))?;
        if !resp.status().is_success() {
            return Err(RemoteError::Status(resp.status().as_u16()));
        }
        let text = tokio::time::timeout(self.timeout, resp.text())
            .await
            .map_err(|_| RemoteError::Timeout(self.timeout))?
            .map_err(|e| self.transport(e))?;
        Ok(configs_from_wire_str(&text)?)
    }

    fn transport(&self, e: reqwest::Error) -> RemoteError {
        if e.is_timeout() {
            RemoteError::Timeout(self.timeout)
        } else {
            RemoteError::Transport(e.to_string())
        }
    }
}
