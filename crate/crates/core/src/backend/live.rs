//! Live backend: transport calls with bounded retry, an optional
//! content-addressed in-memory cache, and an optional token-bucket rate
//! limiter that serializes egress.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::{
    call_id_for, BackendError, CompletionBackend, CompletionRequest, CompletionResponse,
    ResponseSource, Transport, TransportError,
};

/// Retry budget for transient transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    /// Delay before the second attempt; doubles per subsequent attempt.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

impl RetryPolicy {
    fn delay_before(&self, attempt: u32) -> Duration {
        debug_assert!(attempt >= 2);
        self.base_delay * 2u32.saturating_pow(attempt - 2)
    }
}

pub struct LiveBackend {
    transport: Arc<dyn Transport>,
    cache: Option<Mutex<HashMap<String, String>>>,
    limiter: Option<Mutex<TokenBucket>>,
    retry: RetryPolicy,
}

impl LiveBackend {
    /// Cache on, no rate limit, default retry policy.
    pub fn new(transport: Arc<dyn Transport>) -> LiveBackend {
        LiveBackend {
            transport,
            cache: Some(Mutex::new(HashMap::new())),
            limiter: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_cache(mut self, enabled: bool) -> LiveBackend {
        self.cache = enabled.then(|| Mutex::new(HashMap::new()));
        self
    }

    pub fn with_rate_limit(mut self, requests_per_minute: Option<u32>) -> LiveBackend {
        self.limiter = requests_per_minute
            .filter(|&rpm| rpm > 0)
            .map(|rpm| Mutex::new(TokenBucket::per_minute(rpm)));
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> LiveBackend {
        self.retry = retry;
        self
    }
}

impl CompletionBackend for LiveBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let start = Instant::now();
        let hash = &request.prompt.content_hash;
        if let Some(cache) = &self.cache {
            if let Some(text) = cache.lock().expect("cache lock").get(hash) {
                return Ok(CompletionResponse {
                    text: text.clone(),
                    call_id: call_id_for(hash),
                    source: ResponseSource::Cache,
                    latency_ms: start.elapsed().as_millis() as u64,
                });
            }
        }
        let attempts = self.retry.attempts.max(1);
        let mut last_transient = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay_before(attempt));
            }
            if let Some(limiter) = &self.limiter {
                limiter.lock().expect("limiter lock").acquire();
            }
            match self.transport.send(&request.prompt.text, &request.params) {
                Ok(text) => {
                    if let Some(cache) = &self.cache {
                        cache
                            .lock()
                            .expect("cache lock")
                            .insert(hash.clone(), text.clone());
                    }
                    return Ok(CompletionResponse {
                        text,
                        call_id: call_id_for(hash),
                        source: ResponseSource::Live,
                        latency_ms: start.elapsed().as_millis() as u64,
                    });
                }
                Err(TransportError::Auth(message)) => {
                    return Err(BackendError::Auth { message });
                }
                Err(TransportError::Fatal(message)) => {
                    return Err(BackendError::Provider { attempts: attempt, message });
                }
                Err(TransportError::Transient(message)) => last_transient = message,
            }
        }
        Err(BackendError::Provider {
            attempts,
            message: last_transient,
        })
    }
}

/// Token bucket: `capacity` immediate permits, refilled continuously.
/// `acquire` sleeps until a permit is available, so holding the bucket's
/// lock across acquire serializes egress under throttling.
pub(super) struct TokenBucket {
    capacity: f64,
    tokens: f64,
    refill_per_sec: f64,
    last_refill: Instant,
}

impl TokenBucket {
    fn per_minute(rpm: u32) -> TokenBucket {
        TokenBucket::with_rate(rpm as f64, rpm as f64 / 60.0)
    }

    pub(super) fn with_rate(capacity: f64, refill_per_sec: f64) -> TokenBucket {
        TokenBucket {
            capacity,
            tokens: capacity,
            refill_per_sec,
            last_refill: Instant::now(),
        }
    }

    pub(super) fn acquire(&mut self) {
        self.refill();
        while self.tokens < 1.0 {
            let deficit = 1.0 - self.tokens;
            let wait = Duration::from_secs_f64(deficit / self.refill_per_sec);
            std::thread::sleep(wait);
            self.refill();
        }
        self.tokens -= 1.0;
    }

    fn refill(&mut self) {
        let now = Instant::now();
        let elapsed = now.duration_since(self.last_refill).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.refill_per_sec).min(self.capacity);
        self.last_refill = now;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedTransport;
    use crate::prompt::{PromptKind, RenderedPrompt};

    fn request(text: &str) -> CompletionRequest {
        CompletionRequest::new(RenderedPrompt::new(PromptKind::Direct, text.into()))
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
        }
    }

    #[test]
    fn transient_failures_are_retried_within_budget() {
        let transport = Arc::new(ScriptedTransport::new(vec![
            Err(TransportError::Transient("t1".into())),
            Err(TransportError::Transient("t2".into())),
            Ok("recovered".into()),
        ]));
        let backend = LiveBackend::new(transport).with_retry(fast_retry());
        let resp = backend.complete(&request("p")).unwrap();
        assert_eq!(resp.text, "recovered");
        assert_eq!(resp.source, ResponseSource::Live);
    }

    #[test]
    fn retry_budget_is_three_attempts_then_provider_error() {
        let transport = Arc::new(CountingScript::transient_only());
        let backend = LiveBackend::new(transport.clone()).with_retry(fast_retry());
        let err = backend.complete(&request("p")).unwrap_err();
        assert!(matches!(err, BackendError::Provider { attempts: 3, .. }));
        assert_eq!(transport.calls(), 3);
    }

    #[test]
    fn auth_rejection_is_not_retried() {
        let transport = Arc::new(CountingScript::auth_only());
        let backend = LiveBackend::new(transport.clone()).with_retry(fast_retry());
        let err = backend.complete(&request("p")).unwrap_err();
        assert!(matches!(err, BackendError::Auth { .. }));
        assert_eq!(transport.calls(), 1);
    }

    #[test]
    fn cache_hit_skips_the_transport() {
        let transport = Arc::new(CountingScript::constant("answer"));
        let backend = LiveBackend::new(transport.clone());
        let first = backend.complete(&request("same")).unwrap();
        let second = backend.complete(&request("same")).unwrap();
        assert_eq!(first.source, ResponseSource::Live);
        assert_eq!(second.source, ResponseSource::Cache);
        assert_eq!(second.text, "answer");
        assert_eq!(second.call_id, first.call_id);
        assert_eq!(transport.calls(), 1);
    }

    #[test]
    fn disabled_cache_always_goes_live() {
        let transport = Arc::new(CountingScript::constant("answer"));
        let backend = LiveBackend::new(transport.clone()).with_cache(false);
        backend.complete(&request("same")).unwrap();
        backend.complete(&request("same")).unwrap();
        assert_eq!(transport.calls(), 2);
    }

    #[test]
    fn token_bucket_delays_once_capacity_is_spent() {
        let mut bucket = TokenBucket::with_rate(2.0, 100.0);
        let start = Instant::now();
        bucket.acquire();
        bucket.acquire();
        assert!(start.elapsed() < Duration::from_millis(5));
        bucket.acquire();
        // The third permit needs one refill at 100 tokens/sec ≈ 10 ms.
        assert!(start.elapsed() >= Duration::from_millis(5));
    }

    /// Scripted behaviors with a call counter, for retry assertions.
    struct CountingScript {
        mode: ScriptMode,
        calls: std::sync::atomic::AtomicUsize,
    }

    enum ScriptMode {
        TransientOnly,
        AuthOnly,
        Constant(String),
    }

    impl CountingScript {
        fn transient_only() -> CountingScript {
            CountingScript {
                mode: ScriptMode::TransientOnly,
                calls: Default::default(),
            }
        }
        fn auth_only() -> CountingScript {
            CountingScript {
                mode: ScriptMode::AuthOnly,
                calls: Default::default(),
            }
        }
        fn constant(text: &str) -> CountingScript {
            CountingScript {
                mode: ScriptMode::Constant(text.to_string()),
                calls: Default::default(),
            }
        }
        fn calls(&self) -> usize {
            self.calls.load(std::sync::atomic::Ordering::SeqCst)
        }
    }

    impl Transport for CountingScript {
        fn send(
            &self,
            _: &str,
            _: &crate::backend::CompletionParams,
        ) -> Result<String, TransportError> {
            self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            match &self.mode {
                ScriptMode::TransientOnly => Err(TransportError::Transient("down".into())),
                ScriptMode::AuthOnly => Err(TransportError::Auth("bad key".into())),
                ScriptMode::Constant(text) => Ok(text.clone()),
            }
        }
    }
}
