use std::io::ErrorKind;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub temperature: f64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model_name: "gpt-3.5-turbo".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60.0,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("environment variable `{0}` is not set")]
    MissingKey(String),
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {0}")]
    HttpStatus(u16),
    #[error("transport: {0}")]
    Io(String),
    #[error("unexpected response body: {0}")]
    BadResponse(String),
}

pub trait Transport {
    fn complete(&self, prompt: &str, cfg: &EndpointConfig) -> Result<String, TransportError>;
}

/// Blocking client for a `/chat/completions` endpoint.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpTransport;

fn is_timeout(err: &ureq::Transport) -> bool {
    let mut src: Option<&(dyn std::error::Error + 'static)> = std::error::Error::source(err);
    while let Some(e) = src {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(io.kind(), ErrorKind::TimedOut | ErrorKind::WouldBlock) {
                return true;
            }
        }
        src = e.source();
    }
    err.to_string().contains("timed out")
}

impl Transport for HttpTransport {
    fn complete(&self, prompt: &str, cfg: &EndpointConfig) -> Result<String, TransportError> {
        let key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| TransportError::MissingKey(cfg.api_key_env.clone()))?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs.max(0.001)))
            .build();
        let url = format!("{}/chat/completions", cfg.base_url.trim_end_matches('/'));
        let body = json!({
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let resp = agent
            .post(&url)
            .set("Authorization", &format!("Bearer {key}"))
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => TransportError::HttpStatus(code),
                ureq::Error::Transport(t) if is_timeout(&t) => TransportError::Timeout,
                ureq::Error::Transport(t) => TransportError::Io(t.to_string()),
            })?;
        let value: serde_json::Value = resp.into_json().map_err(|e| {
            if e.kind() == ErrorKind::TimedOut {
                TransportError::Timeout
            } else {
                TransportError::BadResponse(e.to_string())
            }
        })?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportError::BadResponse(value.to_string()))
    }
}

/// Send `prompt` to the configured endpoint.
pub fn complete(prompt: &str, cfg: &EndpointConfig) -> Result<String, TransportError> {
    HttpTransport.complete(prompt, cfg)
}

/// Offline endpoint that always answers with the same text.
#[derive(Debug, Clone, Default)]
pub struct StubTransport {
    pub reply: String,
}

impl StubTransport {
    pub fn new(reply: impl Into<String>) -> Self {
        StubTransport { reply: reply.into() }
    }
}

impl Transport for StubTransport {
    fn complete(&self, _prompt: &str, _cfg: &EndpointConfig) -> Result<String, TransportError> {
        Ok(self.reply.clone())
    }
}
