//! Record backend: live completion plus persistence of every new response
//! into a replay store, so a later replay-mode run reproduces this one.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use super::{
    call_id_for, BackendError, CompletionBackend, CompletionRequest, CompletionResponse,
    LiveBackend, ReplayStore, ResponseSource, ENV_MODEL,
};

pub struct RecordBackend {
    inner: LiveBackend,
    path: PathBuf,
    store: Mutex<ReplayStore>,
}

impl RecordBackend {
    /// Wrap a live backend, appending to the store at `path` if one exists
    /// there, so interrupted recordings resume instead of re-spending
    /// live calls.
    pub fn create(inner: LiveBackend, path: PathBuf) -> Result<RecordBackend, BackendError> {
        let store = if path.exists() {
            ReplayStore::load(&path)?
        } else {
            let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "unspecified".to_string());
            ReplayStore::new(model)
        };
        Ok(RecordBackend {
            inner,
            path,
            store: Mutex::new(store),
        })
    }

    pub fn store_path(&self) -> &PathBuf {
        &self.path
    }

    pub fn recorded(&self) -> usize {
        self.store.lock().expect("store lock").len()
    }
}

impl CompletionBackend for RecordBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let start = Instant::now();
        let hash = &request.prompt.content_hash;
        if let Some(text) = self.store.lock().expect("store lock").get(hash) {
            return Ok(CompletionResponse {
                text: text.to_string(),
                call_id: call_id_for(hash),
                source: ResponseSource::Cache,
                latency_ms: start.elapsed().as_millis() as u64,
            });
        }
        let response = self.inner.complete(request)?;
        let mut store = self.store.lock().expect("store lock");
        if store.record(hash, &response.text)? {
            store.save(&self.path)?;
        }
        Ok(response)
    }
}
