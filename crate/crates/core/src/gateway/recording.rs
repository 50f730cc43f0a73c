use std::collections::BTreeMap;
use std::sync::Mutex;

use super::{ChatProvider, ChatRequest, ChatResponse, Fixture, GatewayError, ProviderKind};

/// Wraps a provider and records every successful exchange as a fixture, so a
/// run can later be replayed with a [`super::ScriptedProvider`].
pub struct RecordingProvider<P> {
    inner: P,
    recorded: Mutex<BTreeMap<String, Fixture>>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider { inner, recorded: Mutex::new(BTreeMap::new()) }
    }

    /// Recorded fixtures ordered by digest.
    pub fn fixtures(&self) -> Vec<Fixture> {
        self.recorded.lock().unwrap().values().cloned().collect()
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn kind(&self) -> ProviderKind {
        self.inner.kind()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let resp = self.inner.complete(request)?;
        self.recorded
            .lock()
            .unwrap()
            .insert(request.digest(), Fixture::for_request(request, resp.content.clone()));
        Ok(resp)
    }
}
