//! Text-generation backends behind one trait.
//!
//! Every agentic behavior talks to a [`ChatProvider`]. Three kinds exist: a
//! rule-based [`DeterministicProvider`], a fixture replaying
//! [`ScriptedProvider`] and an HTTP [`RemoteProvider`]. The first two are pure
//! functions of the request, which keeps offline runs reproducible.

mod deterministic;
pub mod prompt;
mod recording;
pub(crate) mod remote;
mod scripted;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use deterministic::DeterministicProvider;
pub use recording::RecordingProvider;
pub use remote::{post_json, RemoteConfig, RemoteProvider, API_KEY_ENV};
pub use scripted::{write_fixtures, Fixture, ScriptedProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Purpose label such as `route`, `rewrite` or `plan`.
    pub tag: String,
}

impl ChatRequest {
    pub fn new(tag: &str, system_prompt: impl Into<String>, user: impl Into<String>) -> Self {
        ChatRequest {
            system_prompt: system_prompt.into(),
            messages: vec![ChatMessage::user(user)],
            temperature: 0.0,
            max_tokens: 512,
            tag: tag.to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest("messages must not be empty".into()));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} is not a finite non-negative number",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Content of the last user message.
    pub fn last_user(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }

    /// SHA-256 over a length-prefixed encoding of every request field, hex
    /// encoded. Independent of platform and of serde formatting.
    pub fn digest(&self) -> String {
        fn put(h: &mut Sha256, bytes: &[u8]) {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        }
        let mut h = Sha256::new();
        put(&mut h, self.system_prompt.as_bytes());
        h.update((self.messages.len() as u64).to_le_bytes());
        for m in &self.messages {
            put(&mut h, if m.role == Role::User { b"user" } else { b"assistant" });
            put(&mut h, m.content.as_bytes());
        }
        h.update(self.temperature.to_bits().to_le_bytes());
        h.update(self.max_tokens.to_le_bytes());
        put(&mut h, self.tag.as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub provider_id: String,
    #[serde(with = "duration_ms")]
    pub latency: Duration,
    pub from_cache: bool,
}

mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Deterministic,
    Scripted,
    Remote,
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::Deterministic => "deterministic",
            ProviderKind::Scripted => "scripted",
            ProviderKind::Remote => "remote",
        })
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("fixture miss for request digest {digest} (tag `{tag}`)")]
    FixtureMiss { digest: String, tag: String },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("rate limit exceeded after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("remote provider is not configured: {0}")]
    NotConfigured(String),
    #[error("fixture file: {0}")]
    Fixtures(String),
}

/// A text-generation backend shareable across worker threads.
pub trait ChatProvider: Send + Sync {
    fn id(&self) -> &str;

    fn kind(&self) -> ProviderKind;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn kind(&self) -> ProviderKind {
        (**self).kind()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityLabel {
    Hallucinatory,
    NonHallucinatory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityVerdict {
    pub label: QualityLabel,
    pub confidence: f64,
}

/// Binary query-quality classification through the provider (tag `classify`).
///
/// The reply must start with `hallucinatory` or `non_hallucinatory`, optionally
/// followed by a confidence in [0, 1].
pub fn classify_quality(
    provider: &dyn ChatProvider,
    query: &str,
) -> Result<QualityVerdict, GatewayError> {
    if query.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("query is empty".into()));
    }
    let request = ChatRequest::new(
        "classify",
        prompt::system("classify"),
        prompt::Sections::new().with("question", query.trim()).render(),
    );
    let reply = provider.complete(&request)?.content;
    parse_verdict(&reply)
        .ok_or_else(|| GatewayError::Provider(format!("unparseable quality verdict `{reply}`")))
}

fn parse_verdict(reply: &str) -> Option<QualityVerdict> {
    let mut words = reply.split_whitespace();
    let head = words.next()?.trim_matches(|c: char| !c.is_ascii_alphanumeric() && c != '_');
    let label = match head.to_ascii_lowercase().replace('-', "_").as_str() {
        "hallucinatory" => QualityLabel::Hallucinatory,
        "non_hallucinatory" => QualityLabel::NonHallucinatory,
        _ => return None,
    };
    let confidence = words
        .next()
        .and_then(|w| w.parse::<f64>().ok())
        .filter(|c| (0.0..=1.0).contains(c))
        .unwrap_or(1.0);
    Some(QualityVerdict { label, confidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_field_sensitive() {
        let r = ChatRequest::new("route", "sys", "hello");
        // computed independently with Python's hashlib over the same encoding
        assert_eq!(r.digest(), "26b509954052e3a863018389e340210e61d4003c133b66f77b893c9ad4598c6b");
        assert_eq!(r.digest(), ChatRequest::new("route", "sys", "hello").digest());
        assert_eq!(r.digest().len(), 64);
        let mut t = r.clone();
        t.temperature = 0.5;
        assert_ne!(r.digest(), t.digest());
        let mut t = r.clone();
        t.tag = "plan".into();
        assert_ne!(r.digest(), t.digest());
        let mut t = r.clone();
        t.max_tokens = 1;
        assert_ne!(r.digest(), t.digest());
        // field boundaries matter
        let a = ChatRequest::new("route", "ab", "c");
        let b = ChatRequest::new("route", "a", "bc");
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn request_validation() {
        let mut r = ChatRequest::new("x", "", "q");
        assert!(r.validate().is_ok());
        r.temperature = f64::NAN;
        assert!(r.validate().is_err());
        r.temperature = 0.0;
        r.messages.clear();
        assert!(r.validate().is_err());
    }

    #[test]
    fn verdict_parsing() {
        let v = parse_verdict("non_hallucinatory 0.8").unwrap();
        assert_eq!(v.label, QualityLabel::NonHallucinatory);
        assert_eq!(v.confidence, 0.8);
        assert_eq!(parse_verdict("Hallucinatory.").unwrap().label, QualityLabel::Hallucinatory);
        assert!(parse_verdict("maybe").is_none());
    }

    #[test]
    fn empty_query_rejected_before_provider_call() {
        let p = ScriptedProvider::new(Vec::new());
        assert!(matches!(
            classify_quality(&p, "   ").unwrap_err(),
            GatewayError::InvalidRequest(_)
        ));
    }
}
