//! Filing types, table schemas, record storage, amendment reconciliation and
//! the synthetic corpus generator.

mod generate;
mod reconcile;
mod registry;
mod store;
mod text;
mod types;

pub use generate::{
    adviser_id, fund_id, generate_synthetic, manager_id, trust_id, GeneratorConfig,
    TOTAL_ASSETS_VARIANTS,
};
pub use reconcile::{reconcile, ReconciledView};
pub use registry::{value_matches_kind, SchemaRegistry};
pub use store::{CorpusHeader, CorpusStore, FilingKey, IngestOutcome, Rejection};
pub use text::{canonical_value, to_embedding_text};
pub use types::{
    AgentProfile, FieldKind, FieldSpec, FilingRecord, FilingType, TableSchema, METADATA_COLUMNS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid schema registry: {0}")]
    Registry(String),
    #[error("unknown table `{table_id}`")]
    UnknownTable { table_id: String },
    #[error("schema violation in table `{table_id}`, field `{field}`: {reason}")]
    Schema { table_id: String, field: String, reason: String },
    #[error("record `{record_id}`: {reason}")]
    Invariant { record_id: String, reason: String },
    #[error("duplicate record_id `{0}`")]
    DuplicateRecord(String),
    #[error("accession `{accession_id}` amends unknown accession `{target}`")]
    DanglingAmendment { accession_id: String, target: String },
    #[error("accession `{accession_id}` amends `{target}` of a different filer, type or period")]
    AmendmentMismatch { accession_id: String, target: String },
    #[error("cyclic amendment chain through accession `{accession_id}`")]
    CyclicAmendment { accession_id: String },
}
