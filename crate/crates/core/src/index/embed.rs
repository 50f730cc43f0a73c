use std::collections::HashMap;

use serde_json::{json, Value};

use super::IndexError;
use crate::gateway::remote::HttpClient;
use crate::gateway::{RemoteConfig, API_KEY_ENV};

/// Maps text to a fixed-dimension real vector.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    /// Identifies the embedder and its parameters; stored in index snapshots.
    fn fingerprint(&self) -> String;

    fn embed(&self, text: &str) -> Result<Vec<f64>, IndexError>;
}

impl<E: Embedder + ?Sized> Embedder for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, IndexError> {
        (**self).embed(text)
    }
}

/// Feature hashing over lowercase alphanumeric tokens: FNV-1a into `dim`
/// buckets, token counts, then L2 normalization. Text without tokens maps to
/// the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashFeatureEmbedder {
    dim: usize,
}

impl HashFeatureEmbedder {
    pub fn new(dim: usize) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::Embedder("dimension must be at least 1".into()));
        }
        Ok(HashFeatureEmbedder { dim })
    }

    pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
    }

    pub fn bucket(&self, token: &str) -> usize {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in token.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        (h % self.dim as u64) as usize
    }
}

impl Embedder for HashFeatureEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!("hash-feature:fnv1a:{}", self.dim)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, IndexError> {
        let mut v = vec![0.0f64; self.dim];
        for t in Self::tokens(text) {
            v[self.bucket(&t)] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

/// Fixed text-to-vector table, used to build oracle embedders in tests and
/// evaluations. Unknown texts map to `fallback`, or fail when none is set.
#[derive(Debug, Clone, Default)]
pub struct LookupEmbedder {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    fallback: Option<Vec<f64>>,
    name: String,
}

impl LookupEmbedder {
    pub fn new(dim: usize, name: impl Into<String>) -> Self {
        LookupEmbedder { dim, table: HashMap::new(), fallback: None, name: name.into() }
    }

    pub fn insert(&mut self, text: impl Into<String>, vector: Vec<f64>) -> Result<(), IndexError> {
        if vector.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        self.table.insert(text.into(), vector);
        Ok(())
    }

    pub fn with_fallback(mut self, vector: Vec<f64>) -> Result<Self, IndexError> {
        if vector.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        self.fallback = Some(vector);
        Ok(self)
    }

    /// Unit basis vector `e_i`.
    pub fn one_hot(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }
}

impl Embedder for LookupEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!("lookup:{}:{}", self.name, self.dim)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, IndexError> {
        self.table
            .get(text)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or_else(|| IndexError::Embedder(format!("no vector for text `{text}`")))
    }
}

/// External embedding endpoint. Sends `{"model", "input"}` and reads
/// `data[0].embedding`.
pub struct RemoteEmbedder {
    client: HttpClient,
    endpoint: String,
    model: String,
    dim: usize,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteConfig, api_key: impl Into<String>, dim: usize) -> Result<Self, IndexError> {
        let endpoint = config.endpoint.clone();
        let model = config.model.clone();
        let client =
            HttpClient::new(config, api_key.into()).map_err(|e| IndexError::Embedder(e.to_string()))?;
        Ok(RemoteEmbedder { client, endpoint, model, dim })
    }

    pub fn from_env(config: RemoteConfig, dim: usize) -> Result<Self, IndexError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| IndexError::Embedder(format!("{API_KEY_ENV} is not set")))?;
        Self::new(config, key, dim)
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}:{}", self.model, self.dim)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, IndexError> {
        let body = json!({"model": self.model, "input": text});
        let value = self
            .client
            .post(&self.endpoint, &body)
            .map_err(|e| IndexError::Embedder(e.to_string()))?;
        let values = value
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| IndexError::Embedder("response lacks data[0].embedding".into()))?;
        let v: Option<Vec<f64>> = values.iter().map(Value::as_f64).collect();
        let v = v.ok_or_else(|| IndexError::Embedder("non-numeric embedding value".into()))?;
        if v.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_feature_is_unit_norm_and_order_free() {
        let e = HashFeatureEmbedder::new(64).unwrap();
        let a = e.embed("Net assets of the Money Market fund").unwrap();
        let b = e.embed("fund money-market THE of assets net").unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(e.embed("  ").unwrap().iter().all(|&x| x == 0.0));
        assert_ne!(a, e.embed("net assets").unwrap());
    }

    #[test]
    fn lookup_uses_fallback() {
        let mut e = LookupEmbedder::new(3, "t");
        e.insert("x", LookupEmbedder::one_hot(3, 1)).unwrap();
        assert!(e.embed("y").is_err());
        let e = e.with_fallback(vec![0.0; 3]).unwrap();
        assert_eq!(e.embed("x").unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(e.embed("y").unwrap(), [0.0; 3]);
    }
}
