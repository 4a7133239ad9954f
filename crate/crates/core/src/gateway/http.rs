//! OpenAI-compatible chat-completions transport.
//!
//! Request body: `{"model", "messages": [{"role": "system"}, {"role": "user"}],
//! "temperature", "max_tokens", "seed"?}`. The reply text is read from
//! `choices[0].message.content`.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatBackend, CompletionRequest, GatewayError, ProviderConfig};

pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    model_id: String,
    api_key: String,
}

impl HttpBackend {
    pub fn new(config: &ProviderConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .http_status_as_error(true)
            .build()
            .into();
        HttpBackend {
            agent,
            endpoint: config.endpoint.clone(),
            model_id: config.model_id.clone(),
            api_key,
        }
    }

    pub fn from_env(config: &ProviderConfig) -> Result<Self, GatewayError> {
        match std::env::var(&config.api_key_env) {
            Ok(key) if !key.is_empty() => Ok(Self::new(config, key)),
            _ => Err(GatewayError::MissingApiKey(config.api_key_env.clone())),
        }
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

fn map_error(e: ureq::Error) -> GatewayError {
    match e {
        ureq::Error::StatusCode(s) => GatewayError::HttpError(s),
        ureq::Error::Timeout(_) => GatewayError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => GatewayError::Timeout,
        other => GatewayError::Transport(other.to_string()),
    }
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn send(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(self.body(request))
            .map_err(map_error)?;
        let value: Value = response
            .into_body()
            .read_json()
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| GatewayError::MalformedResponse("no choices[0].message.content".into()))
    }
}
