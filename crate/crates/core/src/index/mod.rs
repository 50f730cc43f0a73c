//! Embedders and the flat exact-kNN index over record embeddings.
//!
//! Indexes are partitioned into three scopes: one per table, one per agent
//! (all tables of a filing type) and a global one. Vectors are stored in a
//! generic [`Scalar`](crate::Scalar) type.

mod build;
mod embed;
mod flat;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FilingRecord, FilingType, SchemaRegistry};
use crate::Scalar;

pub use build::{
    build_index, persona_index, persona_text, table_index, table_text, ScopedIndexes,
};
pub use embed::{Embedder, HashFeatureEmbedder, LookupEmbedder, RemoteEmbedder};
pub use flat::{FlatIndex, Neighbor, SNAPSHOT_MAGIC};
pub use metrics::{precision_at, r_precision, recall_at};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("duplicate record id `{0}` in index")]
    DuplicateId(String),
    #[error("record `{record_id}` is outside scope {scope}")]
    ScopeMismatch { record_id: String, scope: String },
    #[error("invalid scope: {0}")]
    InvalidScope(String),
    #[error("relevant set is empty; R-Precision is undefined")]
    EmptyRelevant,
    #[error("malformed index snapshot: {0}")]
    Snapshot(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedder: {0}")]
    Embedder(String),
}

/// Search space of an index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum IndexScope {
    Global,
    Agent(FilingType),
    Table(String),
}

impl IndexScope {
    /// Checks the scope against the registry: the table must exist.
    pub fn validate(&self, registry: &SchemaRegistry) -> Result<(), IndexError> {
        match self {
            IndexScope::Table(t) if registry.table(t).is_none() => {
                Err(IndexError::InvalidScope(format!("unknown table `{t}`")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, record: &FilingRecord) -> bool {
        match self {
            IndexScope::Global => true,
            IndexScope::Agent(ft) => record.filing_type == *ft,
            IndexScope::Table(t) => record.table_id == *t,
        }
    }
}

impl fmt::Display for IndexScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexScope::Global => f.write_str("global"),
            IndexScope::Agent(ft) => write!(f, "agent:{}", ft.name()),
            IndexScope::Table(t) => write!(f, "table:{t}"),
        }
    }
}

impl FromStr for IndexScope {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("global") {
            return Ok(IndexScope::Global);
        }
        match s.split_once(':') {
            Some(("agent", ft)) => FilingType::parse_loose(ft)
                .map(IndexScope::Agent)
                .ok_or_else(|| IndexError::InvalidScope(format!("unknown filing type `{ft}`"))),
            Some(("table", t)) if !t.is_empty() => Ok(IndexScope::Table(t.to_string())),
            _ => Err(IndexError::InvalidScope(format!(
                "`{s}` (expected global, agent:<type> or table:<id>)"
            ))),
        }
    }
}

impl From<IndexScope> for String {
    fn from(s: IndexScope) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for IndexScope {
    type Error = IndexError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A finite vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, IndexError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IndexError::NonFinite);
        }
        Ok(EmbeddingVector { values })
    }

    pub fn from_f64(values: &[f64]) -> Result<Self, IndexError> {
        let converted: Option<Vec<T>> = values.iter().map(|&v| T::from_f64(v)).collect();
        Self::new(converted.ok_or(IndexError::NonFinite)?)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<T> {
        self.values
    }
}
