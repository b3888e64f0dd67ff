//! Replay backend: serves recorded responses only. It holds no transport,
//! so a replay run cannot touch the network even in principle.

use std::path::Path;
use std::time::Instant;

use super::{
    call_id_for, BackendError, CompletionBackend, CompletionRequest, CompletionResponse,
    ReplayStore, ResponseSource,
};

pub struct ReplayBackend {
    store: ReplayStore,
}

impl ReplayBackend {
    pub fn load(path: &Path) -> Result<ReplayBackend, BackendError> {
        Ok(ReplayBackend {
            store: ReplayStore::load(path)?,
        })
    }

    pub fn from_store(store: ReplayStore) -> ReplayBackend {
        ReplayBackend { store }
    }

    pub fn store(&self) -> &ReplayStore {
        &self.store
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let start = Instant::now();
        let hash = &request.prompt.content_hash;
        match self.store.get(hash) {
            Some(text) => Ok(CompletionResponse {
                text: text.to_string(),
                call_id: call_id_for(hash),
                source: ResponseSource::Replay,
                latency_ms: start.elapsed().as_millis() as u64,
            }),
            None => Err(BackendError::ReplayMiss { hash: hash.clone() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{content_hash, PromptKind, RenderedPrompt};

    #[test]
    fn hit_returns_recorded_text_with_replay_source() {
        let mut store = ReplayStore::new("m");
        let prompt = RenderedPrompt::new(PromptKind::Direct, "the prompt".into());
        store.record(&prompt.content_hash, "the answer").unwrap();
        let backend = ReplayBackend::from_store(store);
        let resp = backend
            .complete(&CompletionRequest::new(prompt.clone()))
            .unwrap();
        assert_eq!(resp.text, "the answer");
        assert_eq!(resp.source, ResponseSource::Replay);
        assert_eq!(resp.call_id, call_id_for(&prompt.content_hash));
    }

    #[test]
    fn miss_is_an_error_naming_the_hash() {
        let backend = ReplayBackend::from_store(ReplayStore::new("m"));
        let prompt = RenderedPrompt::new(PromptKind::Direct, "unseen".into());
        let err = backend
            .complete(&CompletionRequest::new(prompt))
            .unwrap_err();
        match err {
            BackendError::ReplayMiss { hash } => assert_eq!(hash, content_hash("unseen")),
            other => panic!("expected ReplayMiss, got {other}"),
        }
    }
}
