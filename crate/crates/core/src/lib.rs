//! Multi-agent retrieval and planning over regulatory fund filings.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`corpus`] models the six filing types, reconciles amendments and
//!   generates seeded synthetic corpora.
//! * [`gateway`] abstracts text generation behind deterministic, fixture
//!   replay and remote HTTP providers.
//! * [`index`] holds the embedders and the flat exact-kNN index, generic over
//!   the stored scalar type.
//! * [`routing`] maps questions to (agent, table) routes by embedding,
//!   generation or swarm consensus, and scores them.
//! * [`agents`] is the screening, decomposition, planning, expert search and
//!   plan execution pipeline.
//! * [`questbench`] instantiates the question templates and solves them with
//!   hand-written oracles.
//! * [`eval`] judges answers and assembles the retrieval, routing and agentic
//!   reports.

pub mod agents;
pub mod eval;
pub mod corpus;
pub mod gateway;
pub mod index;
pub mod questbench;
pub mod routing;
pub mod scalar;

pub use scalar::Scalar;

/// Single-precision flat index, the default storage type.
pub type FlatIndexF32 = index::FlatIndex<f32>;
/// Double-precision flat index.
pub type FlatIndexF64 = index::FlatIndex<f64>;
pub type ScopedIndexesF32 = index::ScopedIndexes<f32>;
pub type ScopedIndexesF64 = index::ScopedIndexes<f64>;
