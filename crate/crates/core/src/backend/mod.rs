//! Completion backends behind one interface: a live HTTP chat-completion
//! client, a record mode (live plus persist-to-store), and a replay mode
//! that serves recorded fixtures only.
//!
//! Every request is keyed by the hex SHA-256 of the rendered prompt text,
//! so the in-memory cache, the on-disk replay store and the recorder all
//! agree on identity. Replay lookups are exact-hash with no fuzzy
//! matching: a miss is an error, never a fallback to the network.

mod live;
mod record;
mod replay;
mod store;
mod transport;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::RenderedPrompt;

pub use live::{LiveBackend, RetryPolicy};
pub use record::RecordBackend;
pub use replay::ReplayBackend;
pub use store::{ReplayStore, StoreMeta};
pub use transport::{
    CountingTransport, HttpTransport, ScriptedTransport, Transport, TransportError, ENV_API_BASE,
    ENV_API_KEY, ENV_MODEL,
};

/// Decoding parameters sent with every completion call.
///
/// Temperature defaults to zero: greedy decoding keeps recorded runs
/// reproducible. An empty `model_name` means "use the transport's
/// configured model".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub model_name: String,
}

fn default_max_output_tokens() -> u32 {
    1024
}

impl Default for CompletionParams {
    fn default() -> CompletionParams {
        CompletionParams {
            temperature: 0.0,
            max_output_tokens: 1024,
            model_name: String::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt: RenderedPrompt,
    pub params: CompletionParams,
}

impl CompletionRequest {
    pub fn new(prompt: RenderedPrompt) -> CompletionRequest {
        CompletionRequest {
            prompt,
            params: CompletionParams::default(),
        }
    }
}

/// Where a response text came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseSource {
    Live,
    Cache,
    Replay,
}

#[derive(Debug, Clone)]
pub struct CompletionResponse {
    pub text: String,
    /// Stable identifier derived from the prompt hash, identical across
    /// live, record and replay runs so traces can be diffed between modes.
    pub call_id: String,
    pub source: ResponseSource,
    pub latency_ms: u64,
}

/// Call identifier shared by every backend: a short prefix of the prompt
/// content hash.
pub(crate) fn call_id_for(hash: &str) -> String {
    format!("c-{}", &hash[..hash.len().min(12)])
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("replay store has no entry for prompt hash {hash}")]
    ReplayMiss { hash: String },
    #[error("provider request failed after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },
    #[error("authentication rejected: {message}")]
    Auth { message: String },
    #[error("recorded text for prompt hash {hash} conflicts with an existing entry")]
    RecordConflict { hash: String },
    #[error("replay store {path}: {message}")]
    Storage { path: PathBuf, message: String },
    #[error("backend configuration: {message}")]
    Config { message: String },
}

/// The uniform completion interface. Implementations are safe for
/// concurrent callers.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError>;
}

/// Which backend to build, as selected by configuration or the CLI
/// `--backend {live,record,replay}` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BackendSelector {
    Live {
        #[serde(default = "default_cache")]
        cache: bool,
        #[serde(default)]
        requests_per_minute: Option<u32>,
    },
    Record {
        store: PathBuf,
        #[serde(default = "default_cache")]
        cache: bool,
        #[serde(default)]
        requests_per_minute: Option<u32>,
    },
    Replay {
        store: PathBuf,
    },
}

fn default_cache() -> bool {
    true
}

impl BackendSelector {
    pub fn mode_name(&self) -> &'static str {
        match self {
            BackendSelector::Live { .. } => "live",
            BackendSelector::Record { .. } => "record",
            BackendSelector::Replay { .. } => "replay",
        }
    }
}

/// Build the selected backend.
///
/// Live and record modes need a transport; pass `None` to construct the
/// HTTP transport from the environment. Replay mode never touches a
/// transport, which is what makes replay runs hermetic by construction.
pub fn build_backend(
    selector: &BackendSelector,
    transport: Option<Arc<dyn Transport>>,
) -> Result<Arc<dyn CompletionBackend>, BackendError> {
    let live_from = |transport: Option<Arc<dyn Transport>>,
                     cache: bool,
                     rpm: Option<u32>|
     -> Result<LiveBackend, BackendError> {
        let transport = match transport {
            Some(t) => t,
            None => Arc::new(
                HttpTransport::from_env().map_err(|message| BackendError::Config { message })?,
            ),
        };
        Ok(LiveBackend::new(transport)
            .with_cache(cache)
            .with_rate_limit(rpm))
    };
    match selector {
        BackendSelector::Live {
            cache,
            requests_per_minute,
        } => Ok(Arc::new(live_from(transport, *cache, *requests_per_minute)?)),
        BackendSelector::Record {
            store,
            cache,
            requests_per_minute,
        } => {
            let live = live_from(transport, *cache, *requests_per_minute)?;
            Ok(Arc::new(RecordBackend::create(live, store.clone())?))
        }
        BackendSelector::Replay { store } => Ok(Arc::new(ReplayBackend::load(store)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{PromptKind, RenderedPrompt};

    #[test]
    fn default_params_use_greedy_decoding() {
        let p = CompletionParams::default();
        assert_eq!(p.temperature, 0.0);
        assert!(p.max_output_tokens > 0);
    }

    #[test]
    fn call_ids_are_stable_and_hash_derived() {
        let prompt = RenderedPrompt::new(PromptKind::Direct, "x".into());
        let id = call_id_for(&prompt.content_hash);
        assert_eq!(id, call_id_for(&prompt.content_hash));
        assert!(id.starts_with("c-"));
        assert_eq!(id.len(), 14);
    }

    #[test]
    fn replay_selector_builds_without_any_transport() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        ReplayStore::new("test-model").save(&path).unwrap();
        let backend = build_backend(&BackendSelector::Replay { store: path }, None).unwrap();
        let req = CompletionRequest::new(RenderedPrompt::new(PromptKind::Direct, "q".into()));
        let err = backend.complete(&req).unwrap_err();
        assert!(matches!(err, BackendError::ReplayMiss { .. }));
    }
}
