use std::path::Path;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{load_config_file, request_digest, GenerationParams, Provider, ProviderError, ProviderResponse};
use crate::prompt::PromptPayload;

const BODY_EXCERPT_LEN: usize = 300;

/// Exponential backoff applied to HTTP 429 and 5xx responses only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay_ms: 1000,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, retry: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

/// Connection settings for one chat-completions endpoint. Credentials are
/// never stored here, only the name of the environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub name: String,
    pub base_url: String,
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    #[serde(default = "default_auth_scheme")]
    pub auth_scheme: String,
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default)]
    pub params: Option<GenerationParams>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_path() -> String {
    "/v1/chat/completions".to_string()
}

fn default_auth_header() -> String {
    "Authorization".to_string()
}

fn default_auth_scheme() -> String {
    "Bearer".to_string()
}

fn default_timeout() -> u64 {
    120
}

impl ProviderConfig {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let config: ProviderConfig = load_config_file(path)?;
        if config.name.trim().is_empty() || config.base_url.trim().is_empty() {
            return Err(ProviderError::Config("name and base_url are required".into()));
        }
        Ok(config)
    }

    pub fn endpoint(&self) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }

    /// Params from the config, with its `model_id` applied.
    pub fn generation_params(&self) -> GenerationParams {
        let mut params = self.params.clone().unwrap_or_default();
        if let Some(model) = &self.model_id {
            params.model_id = model.clone();
        }
        params
    }
}

#[derive(Debug)]
pub struct HttpProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Done(String),
    Retry(ProviderError),
    Fail(ProviderError),
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn credential(&self) -> Result<Option<String>, ProviderError> {
        let Some(var) = &self.config.auth_env else {
            return Ok(None);
        };
        match std::env::var(var) {
            Ok(value) if !value.trim().is_empty() => Ok(Some(value)),
            _ => Err(ProviderError::AuthError(format!("environment variable {var} is not set"))),
        }
    }

    fn body(&self, payload: &PromptPayload, params: &GenerationParams) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), json!(params.model_id));
        body.insert("messages".into(), json!(payload.messages));
        body.insert("temperature".into(), json!(params.temperature));
        body.insert("top_p".into(), json!(params.top_p));
        body.insert("max_tokens".into(), json!(params.max_tokens));
        for (key, value) in &params.extra {
            // Numbers and booleans travel as JSON scalars, everything else as a string.
            let parsed = serde_json::from_str::<Value>(value)
                .ok()
                .filter(|v| v.is_number() || v.is_boolean())
                .unwrap_or_else(|| Value::String(value.clone()));
            body.insert(key.clone(), parsed);
        }
        Value::Object(body)
    }

    fn attempt(&self, body: &str, credential: Option<&str>) -> Attempt {
        let mut request = self
            .agent
            .post(&self.config.endpoint())
            .header("Content-Type", "application/json");
        if let Some(secret) = credential {
            let value = if self.config.auth_scheme.is_empty() {
                secret.to_string()
            } else {
                format!("{} {}", self.config.auth_scheme, secret)
            };
            request = request.header(self.config.auth_header.as_str(), value);
        }

        let mut response = match request.send(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Fail(ProviderError::Timeout),
            Err(e) => return Attempt::Fail(ProviderError::Transport(redact(&e.to_string(), credential))),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Fail(ProviderError::Timeout),
            Err(e) => return Attempt::Fail(ProviderError::Transport(redact(&e.to_string(), credential))),
        };
        let excerpt = || redact(&excerpt(&text), credential);
        match status {
            200..=299 => Attempt::Done(text),
            401 | 403 => Attempt::Fail(ProviderError::AuthError(format!("HTTP {status}: {}", excerpt()))),
            429 => Attempt::Retry(ProviderError::RateLimited { attempts: 0 }),
            500..=599 => Attempt::Retry(ProviderError::ProviderError { status, body: excerpt() }),
            _ => Attempt::Fail(ProviderError::ProviderError { status, body: excerpt() }),
        }
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn generate(&self, payload: &PromptPayload, params: &GenerationParams) -> Result<ProviderResponse, ProviderError> {
        params.validate()?;
        let credential = self.credential()?;
        let body = self.body(payload, params).to_string();
        let policy = &self.config.retry;
        let attempts = policy.max_attempts.max(1);
        let started = Instant::now();

        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = policy.delay_before(attempt - 1);
                debug!("{}: retry {attempt} after {delay:?}", self.config.name);
                std::thread::sleep(delay);
            }
            match self.attempt(&body, credential.as_deref()) {
                Attempt::Done(text) => {
                    let completion = parse_completion(&text)?;
                    return Ok(ProviderResponse {
                        text: completion,
                        model_id: params.model_id.clone(),
                        latency_ms: started.elapsed().as_millis() as u64,
                        request_digest: request_digest(payload, params),
                    });
                }
                Attempt::Fail(err) => return Err(err),
                Attempt::Retry(err) => {
                    warn!("{}: attempt {} failed: {err}", self.config.name, attempt + 1);
                    last = Some(err);
                }
            }
        }
        Err(match last {
            Some(ProviderError::RateLimited { .. }) | None => ProviderError::RateLimited { attempts },
            Some(other) => other,
        })
    }
}

fn parse_completion(body: &str) -> Result<String, ProviderError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| ProviderError::MalformedResponse(format!("invalid JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::MalformedResponse("missing choices[0].message.content".into()))
}

fn excerpt(text: &str) -> String {
    match text.char_indices().nth(BODY_EXCERPT_LEN) {
        Some((idx, _)) => format!("{}...", &text[..idx]),
        None => text.to_string(),
    }
}

fn redact(text: &str, credential: Option<&str>) -> String {
    match credential {
        Some(secret) if !secret.is_empty() => text.replace(secret, "[REDACTED]"),
        _ => text.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_attempts: 3,
            base_delay_ms: 100,
            max_delay_ms: 250,
        };
        assert_eq!(p.delay_before(0), Duration::from_millis(100));
        assert_eq!(p.delay_before(1), Duration::from_millis(200));
        assert_eq!(p.delay_before(2), Duration::from_millis(250));
    }

    #[test]
    fn endpoint_joining() {
        let config: ProviderConfig =
            toml::from_str("name = \"gw\"\nbase_url = \"http://localhost:8080/\"\nmodel_id = \"gpt-4\"\n").unwrap();
        assert_eq!(config.endpoint(), "http://localhost:8080/v1/chat/completions");
        assert_eq!(config.generation_params().model_id, "gpt-4");
        assert_eq!(config.retry.max_attempts, 3);
    }

    #[test]
    fn completion_parsing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"Feature: X"}}]}"#;
        assert_eq!(parse_completion(body).unwrap(), "Feature: X");
        assert!(matches!(
            parse_completion(r#"{"choices":[]}"#),
            Err(ProviderError::MalformedResponse(_))
        ));
    }

    #[test]
    fn redaction() {
        assert_eq!(redact("bad key sk-123 here", Some("sk-123")), "bad key [REDACTED] here");
        assert_eq!(excerpt(&"é".repeat(400)).chars().count(), BODY_EXCERPT_LEN + 3);
    }
}
