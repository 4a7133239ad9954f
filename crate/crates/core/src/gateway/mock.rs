//! Scripted backend for offline runs and tests.
//!
//! A script is a JSON object mapping queue keys to lists of replies:
//!
//! ```json
//! {
//!   "topic": ["2.b"],
//!   "bloom/r1": ["Remember", {"error": "timeout"}, "Analyze"],
//!   "passage/r1/s07": ["..."]
//! }
//! ```
//!
//! A request for step `passage` with scope `["r1", "s07"]` pops from
//! `passage/r1/s07` if that queue exists and is non-empty, then from
//! `passage/r1`, then from `passage`. A reply is either a string or an
//! `{"error": ...}` object where the value is `"timeout"`, `"transport"` or
//! an HTTP status number.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{ChatBackend, CompletionRequest, GatewayError};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Fail { error: MockFailure },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MockFailure {
    Status(u16),
    Kind(String),
}

impl MockFailure {
    fn to_error(&self) -> GatewayError {
        match self {
            MockFailure::Status(s) => GatewayError::HttpError(*s),
            MockFailure::Kind(k) if k == "timeout" => GatewayError::Timeout,
            MockFailure::Kind(k) => GatewayError::Transport(format!("scripted {k}")),
        }
    }
}

#[derive(Debug)]
pub struct MockBackend {
    queues: Mutex<BTreeMap<String, VecDeque<MockReply>>>,
}

impl MockBackend {
    pub fn new(queues: BTreeMap<String, Vec<MockReply>>) -> Self {
        MockBackend {
            queues: Mutex::new(queues.into_iter().map(|(k, v)| (k, v.into())).collect()),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, GatewayError> {
        let queues: BTreeMap<String, Vec<MockReply>> =
            serde_json::from_str(json).map_err(|e| GatewayError::MalformedScript(e.to_string()))?;
        Ok(Self::new(queues))
    }

    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::MalformedScript(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replies not yet consumed, summed over all queues.
    pub fn remaining(&self) -> usize {
        self.queues.lock().unwrap().values().map(VecDeque::len).sum()
    }
}

impl ChatBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let mut queues = self.queues.lock().unwrap();
        for depth in (0..=request.scope.len()).rev() {
            let mut key = request.step.clone();
            for part in &request.scope[..depth] {
                key.push('/');
                key.push_str(part);
            }
            if let Some(reply) = queues.get_mut(&key).and_then(VecDeque::pop_front) {
                return match reply {
                    MockReply::Text(t) => Ok(t),
                    MockReply::Fail { error } => Err(error.to_error()),
                };
            }
        }
        Err(GatewayError::MockExhausted(request.step.clone()))
    }
}
