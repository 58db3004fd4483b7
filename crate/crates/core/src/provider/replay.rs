use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{request_digest, GenerationParams, Provider, ProviderError, ProviderResponse};
use crate::prompt::PromptPayload;

/// Recorded responses keyed by hex request digest. Persisted as a JSON object.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayFixture {
    pub entries: BTreeMap<String, String>,
}

impl ReplayFixture {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let read_err = |message: String| ProviderError::FixtureReadError {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let entries = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        Ok(Self { entries })
    }

    /// Loads the fixture, or an empty one if the file does not exist yet.
    pub fn load_or_default(path: &Path) -> Result<Self, ProviderError> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }

    /// Writes the fixture through a temporary file so readers never observe a
    /// partial write.
    pub fn save(&self, path: &Path) -> Result<(), ProviderError> {
        let write_err = |message: String| ProviderError::FixtureWriteError {
            path: path.display().to_string(),
            message,
        };
        let mut json = serde_json::to_string_pretty(&self.entries).map_err(|e| write_err(e.to_string()))?;
        json.push('\n');
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| write_err(e.to_string()))?;
        }
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, json).map_err(|e| write_err(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| write_err(e.to_string()))
    }

    pub fn get(&self, digest: &str) -> Option<&str> {
        self.entries.get(digest).map(String::as_str)
    }

    pub fn insert(&mut self, digest: impl Into<String>, text: impl Into<String>) {
        self.entries.insert(digest.into(), text.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Answers from a fixture; never touches the network.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    name: String,
    fixture: ReplayFixture,
}

impl ReplayProvider {
    pub fn new(name: impl Into<String>, fixture: ReplayFixture) -> Self {
        Self {
            name: name.into(),
            fixture,
        }
    }

    pub fn fixture(&self) -> &ReplayFixture {
        &self.fixture
    }
}

impl Provider for ReplayProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, payload: &PromptPayload, params: &GenerationParams) -> Result<ProviderResponse, ProviderError> {
        params.validate()?;
        let digest = request_digest(payload, params);
        let text = self
            .fixture
            .get(&digest)
            .ok_or_else(|| ProviderError::ReplayMiss(digest.clone()))?;
        Ok(ProviderResponse {
            text: text.to_string(),
            model_id: params.model_id.clone(),
            latency_ms: 0,
            request_digest: digest,
        })
    }
}

/// Calls `provider` and stores the response in the fixture file at `fixture_path`.
pub fn record(
    provider: &dyn Provider,
    payload: &PromptPayload,
    params: &GenerationParams,
    fixture_path: &Path,
) -> Result<ProviderResponse, ProviderError> {
    let response = provider.generate(payload, params)?;
    let mut fixture = ReplayFixture::load_or_default(fixture_path)?;
    fixture.insert(response.request_digest.clone(), response.text.clone());
    fixture.save(fixture_path)?;
    Ok(response)
}

/// Wraps a live provider and appends every response to a fixture file.
/// Fixture writes are serialized; generation itself runs concurrently.
pub struct RecordingProvider<P> {
    inner: P,
    path: PathBuf,
    fixture: Mutex<ReplayFixture>,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P, path: impl Into<PathBuf>) -> Result<Self, ProviderError> {
        let path = path.into();
        let fixture = ReplayFixture::load_or_default(&path)?;
        Ok(Self {
            inner,
            path,
            fixture: Mutex::new(fixture),
        })
    }

    pub fn fixture(&self) -> ReplayFixture {
        self.fixture.lock().expect("fixture lock poisoned").clone()
    }
}

impl<P: Provider> Provider for RecordingProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn generate(&self, payload: &PromptPayload, params: &GenerationParams) -> Result<ProviderResponse, ProviderError> {
        let response = self.inner.generate(payload, params)?;
        let mut fixture = self.fixture.lock().expect("fixture lock poisoned");
        fixture.insert(response.request_digest.clone(), response.text.clone());
        fixture.save(&self.path)?;
        Ok(response)
    }
}
