use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatProvider, ChatRequest, ChatResponse, GatewayError, ProviderKind, Role};

/// Environment variable holding the bearer credential for remote endpoints.
pub const API_KEY_ENV: &str = "REGINTEL_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Chat-completion endpoint, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    /// Retries after the first attempt on timeouts, 429 and 5xx.
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_concurrency: usize,
    pub requests_per_second: f64,
    pub burst: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            model: "gpt-3.5-turbo".into(),
            timeout_ms: 60_000,
            max_retries: 3,
            backoff_ms: 500,
            max_concurrency: 4,
            requests_per_second: 5.0,
            burst: 5.0,
        }
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut p = self.permits.lock().unwrap();
        while *p == 0 {
            p = self.cv.wait(p).unwrap();
        }
        *p -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn take(&self) {
        if self.rate <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                let refill = now.duration_since(s.1).as_secs_f64() * self.rate;
                s.0 = (s.0 + refill).min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Blocking JSON-over-HTTP client with retry, a concurrent-request ceiling and
/// a token-bucket rate limit.
pub(crate) struct HttpClient {
    config: RemoteConfig,
    api_key: String,
    agent: ureq::Agent,
    slots: Semaphore,
    bucket: TokenBucket,
}

impl HttpClient {
    pub(crate) fn new(config: RemoteConfig, api_key: String) -> Result<Self, GatewayError> {
        if config.endpoint.trim().is_empty() {
            return Err(GatewayError::NotConfigured("endpoint url is empty".into()));
        }
        if config.max_concurrency == 0 {
            return Err(GatewayError::NotConfigured("max_concurrency must be at least 1".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpClient {
            slots: Semaphore { permits: Mutex::new(config.max_concurrency), cv: Condvar::new() },
            bucket: TokenBucket {
                rate: config.requests_per_second,
                capacity: config.burst.max(1.0),
                state: Mutex::new((config.burst.max(1.0), Instant::now())),
            },
            config,
            api_key,
            agent,
        })
    }

    pub(crate) fn post(&self, url: &str, body: &Value) -> Result<Value, GatewayError> {
        let _slot = self.slots.acquire();
        let attempts = self.config.max_retries + 1;
        let mut last_err = GatewayError::Provider("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1).min(6)));
            }
            self.bucket.take();
            let mut req = self.agent.post(url).header("Content-Type", "application/json");
            if !self.api_key.is_empty() {
                req = req.header("Authorization", &format!("Bearer {}", self.api_key));
            }
            match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status == 429 {
                        last_err = GatewayError::RateLimited { attempts: attempt + 1 };
                        continue;
                    }
                    if status >= 500 {
                        last_err = GatewayError::Provider(format!("server returned {status}"));
                        continue;
                    }
                    if status >= 400 {
                        let text = resp.body_mut().read_to_string().unwrap_or_default();
                        return Err(GatewayError::Provider(format!("status {status}: {text}")));
                    }
                    return resp
                        .body_mut()
                        .read_json::<Value>()
                        .map_err(|e| GatewayError::Provider(format!("invalid response body: {e}")));
                }
                Err(ureq::Error::Timeout(_)) => {
                    last_err = GatewayError::Timeout(Duration::from_millis(self.config.timeout_ms));
                }
                Err(e) => last_err = GatewayError::Provider(e.to_string()),
            }
        }
        Err(last_err)
    }
}

/// One-shot JSON POST with the default retry policy.
pub fn post_json(config: &RemoteConfig, api_key: &str, body: &Value) -> Result<Value, GatewayError> {
    HttpClient::new(config.clone(), api_key.to_string())?.post(&config.endpoint, body)
}

/// Generic chat-completion endpoint: sends `model`, `messages`, `temperature`
/// and `max_tokens`, reads `choices[0].message.content`.
pub struct RemoteProvider {
    id: String,
    client: HttpClient,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig, api_key: impl Into<String>) -> Result<Self, GatewayError> {
        Ok(RemoteProvider {
            id: format!("remote:{}", config.model),
            client: HttpClient::new(config, api_key.into())?,
        })
    }

    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(config: RemoteConfig) -> Result<Self, GatewayError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| GatewayError::NotConfigured(format!("{API_KEY_ENV} is not set")))?;
        RemoteProvider::new(config, key)
    }

    pub fn wire_body(&self, request: &ChatRequest) -> Value {
        wire_body(&self.client.config.model, request)
    }
}

pub(crate) fn wire_body(model: &str, request: &ChatRequest) -> Value {
    let mut messages = Vec::with_capacity(request.messages.len() + 1);
    if !request.system_prompt.is_empty() {
        messages.push(json!({"role": "system", "content": request.system_prompt}));
    }
    for m in &request.messages {
        let role = match m.role {
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        messages.push(json!({"role": role, "content": m.content}));
    }
    json!({
        "model": model,
        "messages": messages,
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    })
}

impl ChatProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Remote
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let started = Instant::now();
        let body = self.wire_body(request);
        let value = self.client.post(&self.client.config.endpoint, &body)?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                GatewayError::Provider("response lacks choices[0].message.content".into())
            })?;
        Ok(ChatResponse {
            content: content.to_string(),
            provider_id: self.id.clone(),
            latency: started.elapsed(),
            from_cache: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves `statuses` in order, one per connection, with the given body on 200.
    fn mock_server(statuses: Vec<u16>, body: &'static str) -> (String, Arc<AtomicUsize>, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for status in statuses {
                let (mut stream, _) = listener.accept().unwrap();
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                let payload = if status == 200 { body } else { "{}" };
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                )
                .unwrap();
            }
            bodies
        });
        (url, hits, handle)
    }

    fn config(url: String) -> RemoteConfig {
        RemoteConfig {
            endpoint: url,
            model: "test-model".into(),
            timeout_ms: 5_000,
            max_retries: 2,
            backoff_ms: 1,
            max_concurrency: 2,
            requests_per_second: 0.0,
            burst: 1.0,
        }
    }

    #[test]
    fn sends_minimal_wire_format_and_reads_choice() {
        let (url, _, handle) =
            mock_server(vec![200], r#"{"choices":[{"message":{"role":"assistant","content":"NMFP"}}]}"#);
        let p = RemoteProvider::new(config(url), "secret").unwrap();
        let mut req = ChatRequest::new("route", "system text", "which filing?");
        req.temperature = 0.25;
        let resp = p.complete(&req).unwrap();
        assert_eq!(resp.content, "NMFP");
        assert!(!resp.from_cache);
        let sent: Value = serde_json::from_str(&handle.join().unwrap()[0]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["temperature"], 0.25);
        assert_eq!(sent["max_tokens"], 512);
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["messages"][1]["content"], "which filing?");
    }

    #[test]
    fn retries_transient_failures() {
        let (url, hits, handle) =
            mock_server(vec![503, 429, 200], r#"{"choices":[{"message":{"content":"ok"}}]}"#);
        let p = RemoteProvider::new(config(url), "").unwrap();
        assert_eq!(p.complete(&ChatRequest::new("t", "", "q")).unwrap().content, "ok");
        handle.join().unwrap();
        assert_eq!(hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_retry_cap() {
        let (url, _, handle) = mock_server(vec![429, 429, 429], "");
        let p = RemoteProvider::new(config(url), "").unwrap();
        let err = p.complete(&ChatRequest::new("t", "", "q")).unwrap_err();
        assert!(matches!(err, GatewayError::RateLimited { attempts: 3 }));
        handle.join().unwrap();
    }

    #[test]
    fn unconfigured_endpoint_rejected() {
        assert!(matches!(
            RemoteProvider::new(RemoteConfig::default(), "k"),
            Err(GatewayError::NotConfigured(_))
        ));
    }
}
