use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ChatResponse, GatewayError, ProviderKind};

/// One recorded `(request digest, response)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub digest: String,
    pub response: String,
    /// Purpose tag of the recorded request, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl Fixture {
    pub fn for_request(request: &ChatRequest, response: impl Into<String>) -> Fixture {
        Fixture {
            digest: request.digest(),
            response: response.into(),
            tag: Some(request.tag.clone()),
        }
    }
}

/// Replays recorded responses keyed by request digest. A miss is an error.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    id: String,
    fixtures: HashMap<String, String>,
}

impl ScriptedProvider {
    pub fn new(fixtures: impl IntoIterator<Item = Fixture>) -> ScriptedProvider {
        ScriptedProvider {
            id: "scripted".into(),
            fixtures: fixtures.into_iter().map(|f| (f.digest, f.response)).collect(),
        }
    }

    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<ScriptedProvider, GatewayError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| GatewayError::Fixtures(format!("{}: {e}", path.display())))?;
        let mut fixtures = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Fixture = serde_json::from_str(line).map_err(|e| {
                GatewayError::Fixtures(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            fixtures.push(f);
        }
        Ok(ScriptedProvider::new(fixtures))
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

pub fn write_fixtures<W: Write>(fixtures: &[Fixture], mut out: W) -> std::io::Result<()> {
    for f in fixtures {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

impl ChatProvider for ScriptedProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Scripted
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let digest = request.digest();
        match self.fixtures.get(&digest) {
            Some(content) => Ok(ChatResponse {
                content: content.clone(),
                provider_id: self.id.clone(),
                latency: Duration::ZERO,
                from_cache: true,
            }),
            None => Err(GatewayError::FixtureMiss { digest, tag: request.tag.clone() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replays_matching_digest() {
        let req = ChatRequest::new("route", "sys", "which filing?");
        let p = ScriptedProvider::new([Fixture::for_request(&req, "NCEN")]);
        let resp = p.complete(&req).unwrap();
        assert_eq!(resp.content, "NCEN");
        assert!(resp.from_cache);
    }

    #[test]
    fn miss_is_an_error() {
        let p = ScriptedProvider::new([]);
        let err = p.complete(&ChatRequest::new("route", "", "q")).unwrap_err();
        assert!(err.to_string().contains("fixture miss"));
    }

    #[test]
    fn jsonl_round_trip() {
        let req = ChatRequest::new("plan", "", "q");
        let fixtures = vec![Fixture::for_request(&req, "{}")];
        let mut buf = Vec::new();
        write_fixtures(&fixtures, &mut buf).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), &buf).unwrap();
        let p = ScriptedProvider::from_jsonl(f.path()).unwrap();
        assert_eq!(p.complete(&req).unwrap().content, "{}");
    }
}
