//! Chat-completion access shared by every pipeline step.
//!
//! A [`Gateway`] wraps one [`ChatBackend`] (the live HTTP client or the
//! scripted mock) and adds retry with exponential backoff, a process-wide
//! cap on in-flight requests and an optional JSONL request log.

mod http;
mod mock;
pub mod template;

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockReply};
pub use template::{PromptTemplate, RenderedPrompt, TemplateError};

/// Environment variable read for the API key unless configured otherwise.
pub const DEFAULT_API_KEY_ENV: &str = "TRANSCREATE_API_KEY";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP status {0}")]
    HttpError(u16),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        last: Box<GatewayError>,
    },
    #[error("environment variable {0} with the API key is not set")]
    MissingApiKey(String),
    #[error("mock script has no reply left for step {0:?}")]
    MockExhausted(String),
    #[error("malformed mock script: {0}")]
    MalformedScript(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
}

impl GatewayError {
    /// Errors worth retrying: timeouts, throttling, server-side failures and
    /// dropped connections.
    pub fn is_transient(&self) -> bool {
        match self {
            GatewayError::Timeout | GatewayError::Transport(_) => true,
            GatewayError::HttpError(s) => *s == 408 || *s == 429 || *s >= 500,
            _ => false,
        }
    }
}

/// One chat-completion call.
///
/// `step` and `scope` do not reach the model; they label the call for the
/// mock backend's per-step queues and for the request log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub step: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scope: Vec<String>,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    /// Temperature 0, seed 0, 2048 output tokens.
    pub fn new(step: impl Into<String>, prompt: RenderedPrompt) -> Self {
        CompletionRequest {
            step: step.into(),
            scope: Vec::new(),
            system: prompt.system,
            user: prompt.user,
            temperature: 0.0,
            seed: Some(0),
            max_output_tokens: 2048,
        }
    }

    pub fn with_scope(mut self, scope: Vec<String>) -> Self {
        self.scope = scope;
        self
    }
}

/// Something that can answer a single completion request, once.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;
    fn send(&self, request: &CompletionRequest) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_id: String,
    pub api_key_env: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// First backoff delay; doubles on each retry.
    pub backoff_base_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_id: "gpt-4o".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_s: 120.0,
            max_retries: 3,
            max_in_flight: 4,
            backoff_base_ms: 1000,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err("timeout_s must be positive".into());
        }
        Ok(())
    }
}

/// Backoff schedule: `base · 2^(attempt−1)`, scaled by a uniform jitter in
/// `[1 − jitter, 1 + jitter]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base: Duration,
    pub jitter: f64,
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32, rng: &mut impl Rng) -> Duration {
        let nominal = self.base.as_secs_f64() * 2f64.powi(retry.saturating_sub(1) as i32);
        let scale = if self.jitter > 0.0 {
            rng.random_range(1.0 - self.jitter..=1.0 + self.jitter)
        } else {
            1.0
        };
        Duration::from_secs_f64(nominal * scale)
    }
}

/// Counting semaphore bounding concurrent backend calls.
struct InFlight {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(max: usize) -> Self {
        InFlight {
            max: max.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.active.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Serialize)]
struct LogEntry<'a> {
    backend: &'a str,
    request: &'a CompletionRequest,
    response: Option<&'a str>,
    error: Option<String>,
    attempts: u32,
    latency_ms: u128,
}

/// Result of a successful call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// Backend calls made, including the successful one.
    pub attempts: u32,
}

pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    policy: RetryPolicy,
    in_flight: InFlight,
    log: Option<Mutex<File>>,
    peak: Mutex<usize>,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>, policy: RetryPolicy, max_in_flight: usize) -> Self {
        Gateway {
            backend,
            policy,
            in_flight: InFlight::new(max_in_flight),
            log: None,
            peak: Mutex::new(0),
        }
    }

    /// Live HTTP gateway. Fails with `MissingApiKey` when the configured
    /// environment variable is unset.
    pub fn live(config: &ProviderConfig) -> Result<Self, GatewayError> {
        let backend = HttpBackend::from_env(config)?;
        Ok(Self::new(
            Box::new(backend),
            RetryPolicy {
                max_retries: config.max_retries,
                base: Duration::from_millis(config.backoff_base_ms),
                jitter: 0.2,
            },
            config.max_in_flight,
        ))
    }

    /// Scripted gateway. Retries happen without sleeping.
    pub fn mock(backend: MockBackend, max_retries: u32) -> Self {
        Self::new(
            Box::new(backend),
            RetryPolicy {
                max_retries,
                base: Duration::ZERO,
                jitter: 0.0,
            },
            usize::MAX,
        )
    }

    /// Append one JSON line per call to `path`.
    pub fn with_request_log(mut self, path: &Path) -> std::io::Result<Self> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(Mutex::new(f));
        Ok(self)
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Highest number of simultaneously outstanding backend calls seen.
    pub fn peak_in_flight(&self) -> usize {
        *self.peak.lock().unwrap()
    }

    fn send_once(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let _permit = self.in_flight.acquire();
        {
            let n = *self.in_flight.active.lock().unwrap();
            let mut peak = self.peak.lock().unwrap();
            *peak = (*peak).max(n);
        }
        self.backend.send(request)
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        let started = Instant::now();
        let mut attempts = 0;
        let result = loop {
            attempts += 1;
            match self.send_once(request) {
                Ok(text) => break Ok(text),
                Err(e) if e.is_transient() && attempts <= self.policy.max_retries => {
                    let wait = self.policy.delay(attempts, &mut rand::rng());
                    log::debug!("{} attempt {attempts} failed ({e}); retrying in {wait:?}", request.step);
                    std::thread::sleep(wait);
                }
                Err(e) if e.is_transient() => {
                    break Err(GatewayError::RetriesExhausted {
                        attempts,
                        last: Box::new(e),
                    })
                }
                Err(e) => break Err(e),
            }
        };
        self.write_log(request, &result, attempts, started.elapsed());
        result.map(|text| Completion { text, attempts })
    }

    fn write_log(
        &self,
        request: &CompletionRequest,
        result: &Result<String, GatewayError>,
        attempts: u32,
        latency: Duration,
    ) {
        let Some(log) = &self.log else { return };
        let entry = LogEntry {
            backend: self.backend.name(),
            request,
            response: result.as_ref().ok().map(String::as_str),
            error: result.as_ref().err().map(ToString::to_string),
            attempts,
            latency_ms: latency.as_millis(),
        };
        let mut line = serde_json::to_string(&entry).expect("log entry serializes");
        line.push('\n');
        if let Err(e) = log.lock().unwrap().write_all(line.as_bytes()) {
            log::warn!("request log write failed: {e}");
        }
    }
}
