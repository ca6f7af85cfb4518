//! Text-completion and embedding providers.
//!
//! Two backends implement [`Provider`]: an OpenAI-compatible HTTP client and a
//! deterministic offline stub. Nothing else in the crate talks to the network.

mod remote;
mod stub;
pub mod vocab;

use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::RemoteProvider;
pub use stub::{stub_generate_pair, StubProvider, STUB_EMBED_DIM};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("environment variable {0} holding the API key is not set")]
    AuthMissing(String),
    #[error("provider failed after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },
    #[error("request needs ~{requested} tokens, provider limit is {limit}")]
    TokenLimit { requested: usize, limit: usize },
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: usize,
    pub temperature: f64,
    /// Only the stub honours the seed.
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self, context_limit: usize) -> Result<(), ProviderError> {
        if self.prompt.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("empty prompt".into()));
        }
        if self.max_tokens == 0 {
            return Err(ProviderError::InvalidRequest("max_tokens must be positive".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ProviderError::InvalidRequest("temperature must be >= 0".into()));
        }
        let requested = estimate_tokens(&self.prompt) + self.max_tokens;
        if requested > context_limit {
            return Err(ProviderError::TokenLimit {
                requested,
                limit: context_limit,
            });
        }
        Ok(())
    }
}

pub const DEFAULT_MAX_TOKENS: usize = 1024;
pub const DEFAULT_TEMPERATURE: f64 = 0.7;

/// Rough token count (four characters per token), used for limit checks.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Remote,
    Stub,
}

/// Provider settings. The API key itself is never stored here, only the name
/// of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub embedding_model: Option<String>,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub retries: u32,
    pub backoff_base_ms: u64,
    pub max_in_flight: usize,
    pub context_limit: usize,
    /// Salt for the stub's embedding hash.
    pub stub_salt: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Stub,
            endpoint: None,
            model: None,
            embedding_model: None,
            api_key_env: "UGEN_API_KEY".into(),
            timeout_secs: 60,
            retries: 3,
            backoff_base_ms: 1000,
            max_in_flight: 4,
            context_limit: 4097,
            stub_salt: 0,
        }
    }
}

impl ProviderConfig {
    pub fn stub() -> Self {
        Self::default()
    }

    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kind: ProviderKind::Remote,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_in_flight == 0 {
            return Err(ProviderError::InvalidConfig("max_in_flight must be >= 1".into()));
        }
        if self.kind == ProviderKind::Remote {
            if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                return Err(ProviderError::InvalidConfig("remote provider needs an endpoint".into()));
            }
            if self.model.as_deref().is_none_or(|m| m.trim().is_empty()) {
                return Err(ProviderError::InvalidConfig("remote provider needs a model".into()));
            }
        }
        Ok(())
    }
}

/// A completion and embedding backend. Implementations are stateless after
/// construction and safe to call from several threads.
pub trait Provider: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError>;

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;

    /// Short identifier recorded in manifests.
    fn id(&self) -> String;
}

/// Builds the provider described by `cfg`.
pub fn connect(cfg: &ProviderConfig) -> Result<Box<dyn Provider>, ProviderError> {
    cfg.validate()?;
    match cfg.kind {
        ProviderKind::Stub => Ok(Box::new(StubProvider::new(cfg.clone()))),
        ProviderKind::Remote => Ok(Box::new(RemoteProvider::new(cfg.clone())?)),
    }
}

pub fn complete(cfg: &ProviderConfig, req: &CompletionRequest) -> Result<String, ProviderError> {
    connect(cfg)?.complete(req)
}

pub fn embed(cfg: &ProviderConfig, text: &str) -> Result<Vec<f64>, ProviderError> {
    connect(cfg)?.embed(text)
}

/// Counting semaphore capping in-flight requests.
#[derive(Debug)]
pub(crate) struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

pub(crate) struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut free = self.0.free.lock().unwrap_or_else(|e| e.into_inner());
        *free += 1;
        self.0.cv.notify_one();
    }
}
