//! Text generation backends.
//!
//! [`HttpProvider`] speaks the OpenAI-style chat-completions wire format and
//! works with any compatible gateway. [`ReplayProvider`] answers from a
//! recorded fixture keyed by request digest, and [`RecordingProvider`] wraps a
//! live backend to populate such a fixture.

mod fences;
mod http;
mod replay;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::{Message, PromptPayload};

pub use fences::strip_fences;
pub use http::{HttpProvider, ProviderConfig, RetryPolicy};
pub use replay::{record, RecordingProvider, ReplayFixture, ReplayProvider};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
pub const DEFAULT_TOP_P: f64 = 1.0;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationParams {
    pub model_id: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Provider-specific knobs, forwarded in the request body.
    pub extra: BTreeMap<String, String>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            model_id: String::new(),
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            max_tokens: DEFAULT_MAX_TOKENS,
            extra: BTreeMap::new(),
        }
    }
}

impl GenerationParams {
    pub fn for_model(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |msg: String| Err(ProviderError::InvalidParams(msg));
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive".into());
        }
        Ok(())
    }

    /// Loads params from TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let params: GenerationParams = load_config_file(path)?;
        Ok(params)
    }
}

pub(crate) fn load_config_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ProviderError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProviderError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub model_id: String,
    pub latency_ms: u64,
    pub request_digest: String,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    AuthError(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("request timed out")]
    Timeout,
    #[error("provider returned HTTP {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("no recorded response for request digest {0}")]
    ReplayMiss(String),
    #[error("failed to write fixture {path}: {message}")]
    FixtureWriteError { path: String, message: String },
    #[error("failed to read fixture {path}: {message}")]
    FixtureReadError { path: String, message: String },
    #[error("invalid generation params: {0}")]
    InvalidParams(String),
    #[error("invalid provider config: {0}")]
    Config(String),
}

/// A backend that turns a prompt payload into completion text.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, payload: &PromptPayload, params: &GenerationParams) -> Result<ProviderResponse, ProviderError>;
}

#[derive(Serialize)]
struct DigestInput<'a> {
    messages: &'a [Message],
    model: &'a str,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    extra: &'a BTreeMap<String, String>,
}

/// Hex SHA-256 over the canonical JSON of the request content: messages plus
/// every generation parameter.
pub fn request_digest(payload: &PromptPayload, params: &GenerationParams) -> String {
    let input = DigestInput {
        messages: &payload.messages,
        model: &params.model_id,
        temperature: params.temperature,
        top_p: params.top_p,
        max_tokens: params.max_tokens,
        extra: &params.extra,
    };
    let bytes = serde_json::to_vec(&input).expect("digest input serializes");
    hex::encode(Sha256::digest(&bytes))
}
