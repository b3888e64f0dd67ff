//! The transport seam between backends and the network.
//!
//! Backends call a [`Transport`] rather than an HTTP client directly, so
//! tests can substitute scripted or counting doubles and assert that
//! replay runs perform zero round trips.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::json;

use super::CompletionParams;

pub const ENV_API_KEY: &str = "PCR_API_KEY";
pub const ENV_API_BASE: &str = "PCR_API_BASE";
pub const ENV_MODEL: &str = "PCR_MODEL";

/// Transport failures, split by how the caller should react.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Credential rejection; never retried.
    Auth(String),
    /// Network trouble, throttling or a server-side error; retried.
    Transient(String),
    /// A response we cannot use (malformed body, unexpected shape); not
    /// retried because a retry would get the same answer.
    Fatal(String),
}

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportError::Auth(m) => write!(f, "auth: {m}"),
            TransportError::Transient(m) => write!(f, "transient: {m}"),
            TransportError::Fatal(m) => write!(f, "fatal: {m}"),
        }
    }
}

/// One completion round trip. Implementations must be callable from
/// multiple threads.
pub trait Transport: Send + Sync {
    fn send(&self, prompt_text: &str, params: &CompletionParams)
        -> Result<String, TransportError>;
}

/// Minimal chat-completion HTTP client.
///
/// The wire shape is a single user message with no system prompt, so any
/// endpoint speaking the common chat-completion dialect works. Credentials
/// and addressing come from `PCR_API_KEY`, `PCR_API_BASE` and `PCR_MODEL`.
pub struct HttpTransport {
    agent: ureq::Agent,
    base_url: String,
    api_key: String,
    model: String,
}

impl HttpTransport {
    pub fn from_env() -> Result<HttpTransport, String> {
        let api_key =
            std::env::var(ENV_API_KEY).map_err(|_| format!("{ENV_API_KEY} is not set"))?;
        let base_url = std::env::var(ENV_API_BASE)
            .unwrap_or_else(|_| "https://api.openai.com/v1".to_string());
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-3.5-turbo".to_string());
        Ok(HttpTransport::new(base_url, api_key, model))
    }

    pub fn new(
        base_url: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
    ) -> HttpTransport {
        HttpTransport {
            agent: ureq::Agent::new_with_defaults(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            model: model.into(),
        }
    }

    pub fn model(&self) -> &str {
        &self.model
    }
}

impl Transport for HttpTransport {
    fn send(
        &self,
        prompt_text: &str,
        params: &CompletionParams,
    ) -> Result<String, TransportError> {
        let model = if params.model_name.is_empty() {
            self.model.as_str()
        } else {
            params.model_name.as_str()
        };
        let body = json!({
            "model": model,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
            "messages": [{"role": "user", "content": prompt_text}],
        });
        let url = format!("{}/chat/completions", self.base_url);
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(classify_http_error)?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Fatal(format!("unreadable response body: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| {
                TransportError::Fatal("response missing choices[0].message.content".to_string())
            })
    }
}

fn classify_http_error(err: ureq::Error) -> TransportError {
    match err {
        ureq::Error::StatusCode(code) if code == 401 || code == 403 => {
            TransportError::Auth(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
            TransportError::Transient(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) => TransportError::Fatal(format!("HTTP {code}")),
        other => TransportError::Transient(other.to_string()),
    }
}

/// Wraps a transport and counts round trips.
///
/// Keep an `Arc<CountingTransport<_>>`, hand a clone to the backend, and
/// assert on [`CountingTransport::calls`] afterwards — replay-mode runs
/// must leave the count at zero.
pub struct CountingTransport<T: Transport> {
    inner: T,
    calls: AtomicUsize,
}

impl<T: Transport> CountingTransport<T> {
    pub fn new(inner: T) -> CountingTransport<T> {
        CountingTransport {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn send(
        &self,
        prompt_text: &str,
        params: &CompletionParams,
    ) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.send(prompt_text, params)
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn send(
        &self,
        prompt_text: &str,
        params: &CompletionParams,
    ) -> Result<String, TransportError> {
        (**self).send(prompt_text, params)
    }
}

/// Test double that replays a fixed script of results, one per call, then
/// fails fatally if called again.
pub struct ScriptedTransport {
    script: Mutex<VecDeque<Result<String, TransportError>>>,
}

impl ScriptedTransport {
    pub fn new(script: Vec<Result<String, TransportError>>) -> ScriptedTransport {
        ScriptedTransport {
            script: Mutex::new(script.into()),
        }
    }

    /// A transport that answers every call with the same text.
    pub fn constant(text: &str) -> ConstantTransport {
        ConstantTransport {
            text: text.to_string(),
        }
    }
}

impl Transport for ScriptedTransport {
    fn send(&self, _: &str, _: &CompletionParams) -> Result<String, TransportError> {
        self.script
            .lock()
            .expect("script lock")
            .pop_front()
            .unwrap_or_else(|| {
                Err(TransportError::Fatal(
                    "scripted transport exhausted".to_string(),
                ))
            })
    }
}

/// See [`ScriptedTransport::constant`].
pub struct ConstantTransport {
    text: String,
}

impl Transport for ConstantTransport {
    fn send(&self, _: &str, _: &CompletionParams) -> Result<String, TransportError> {
        Ok(self.text.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_transport_tallies_round_trips() {
        let t = CountingTransport::new(ScriptedTransport::constant("ok"));
        let params = CompletionParams::default();
        assert_eq!(t.calls(), 0);
        t.send("a", &params).unwrap();
        t.send("b", &params).unwrap();
        assert_eq!(t.calls(), 2);
    }

    #[test]
    fn scripted_transport_replays_in_order_then_fails() {
        let t = ScriptedTransport::new(vec![
            Ok("one".to_string()),
            Err(TransportError::Transient("blip".to_string())),
        ]);
        let params = CompletionParams::default();
        assert_eq!(t.send("", &params).unwrap(), "one");
        assert!(matches!(
            t.send("", &params),
            Err(TransportError::Transient(_))
        ));
        assert!(matches!(t.send("", &params), Err(TransportError::Fatal(_))));
    }

    #[test]
    fn http_status_classification() {
        assert!(matches!(
            classify_http_error(ureq::Error::StatusCode(401)),
            TransportError::Auth(_)
        ));
        assert!(matches!(
            classify_http_error(ureq::Error::StatusCode(429)),
            TransportError::Transient(_)
        ));
        assert!(matches!(
            classify_http_error(ureq::Error::StatusCode(503)),
            TransportError::Transient(_)
        ));
        assert!(matches!(
            classify_http_error(ureq::Error::StatusCode(404)),
            TransportError::Fatal(_)
        ));
    }
}
