//! Query routing: map a question to the (agent, table) routes holding its
//! data by embedding similarity, two-stage generation or swarm consensus.

mod embedding;
mod generative;
mod score;
mod swarm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FilingType, SchemaRegistry};
use crate::gateway::GatewayError;
use crate::index::IndexError;

pub use embedding::route_embedding;
pub use generative::{
    agent_candidates, parse_agent_reply, parse_table_reply, route_generative, route_request,
    table_candidates,
};
pub use score::{score_routing, ConfusionMatrix, CreditMode, RoutingScore};
pub use swarm::{
    parse_proposal, route_swarm, swarm_request, variation_key, Proposal, SwarmConfig,
    SwarmTranscript, VoteCount,
};

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error("no table index for agent {0}")]
    MissingTableIndex(FilingType),
    #[error("persona index must hold the six agents: {0}")]
    BadPersonaIndex(String),
    #[error("gold route list is empty for sample {0}")]
    EmptyGold(usize),
    #[error("invalid swarm config: {0}")]
    InvalidSwarmConfig(String),
    #[error("invalid route `{0}`")]
    InvalidRoute(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// An (agent, table) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route {
    pub agent: FilingType,
    pub table: String,
}

impl Route {
    pub fn new(agent: FilingType, table: impl Into<String>) -> Route {
        Route { agent, table: table.into() }
    }

    /// Builds a route after checking that the table belongs to the agent.
    pub fn checked(
        registry: &SchemaRegistry,
        agent: FilingType,
        table: &str,
    ) -> Result<Route, RoutingError> {
        match registry.table(table) {
            Some(t) if t.filing_type == agent => Ok(Route::new(agent, table)),
            _ => Err(RoutingError::InvalidRoute(format!("{}/{table}", agent.name()))),
        }
    }

    /// Ordering key used for tie-breaks: agent display name, then table id.
    pub fn sort_key(&self) -> (&'static str, &str) {
        (self.agent.name(), self.table.as_str())
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.agent.name(), self.table)
    }
}

impl FromStr for Route {
    type Err = RoutingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, t) = s.trim().split_once('/').ok_or_else(|| RoutingError::InvalidRoute(s.into()))?;
        let agent = FilingType::parse_loose(a).ok_or_else(|| RoutingError::InvalidRoute(s.into()))?;
        let table = t.trim();
        if table.is_empty() {
            return Err(RoutingError::InvalidRoute(s.into()));
        }
        Ok(Route::new(agent, table))
    }
}

/// Renders a route sequence as `A/t1, B/t2`.
pub fn format_routes(routes: &[Route]) -> String {
    routes.iter().map(Route::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EmbeddingRag,
    Generative,
    Swarm,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::EmbeddingRag, Strategy::Generative, Strategy::Swarm];

    /// Command-line name.
    pub fn cli_name(self) -> &'static str {
        match self {
            Strategy::EmbeddingRag => "embed",
            Strategy::Generative => "gen",
            Strategy::Swarm => "swarm",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::EmbeddingRag => "Embedding RAG",
            Strategy::Generative => "Generative",
            Strategy::Swarm => "Swarm",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "embed" | "embedding" | "embedding_rag" => Ok(Strategy::EmbeddingRag),
            "gen" | "generative" => Ok(Strategy::Generative),
            "swarm" => Ok(Strategy::Swarm),
            other => Err(format!("unknown strategy `{other}` (expected embed, gen or swarm)")),
        }
    }
}

/// Result of routing one question. `predicted` is empty only when the
/// outcome is unroutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingOutcome {
    pub predicted: Vec<Route>,
    pub strategy: Strategy,
    pub unroutable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<SwarmTranscript>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RoutingOutcome {
    pub fn routed(strategy: Strategy, predicted: Vec<Route>) -> Self {
        debug_assert!(!predicted.is_empty());
        RoutingOutcome { predicted, strategy, unroutable: false, transcript: None, note: None }
    }

    pub fn unroutable(strategy: Strategy, note: impl Into<String>) -> Self {
        RoutingOutcome {
            predicted: Vec::new(),
            strategy,
            unroutable: true,
            transcript: None,
            note: Some(note.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_parse_and_check() {
        let r: Route = "NPORT/nport_holdings".parse().unwrap();
        assert_eq!(r, Route::new(FilingType::Nport, "nport_holdings"));
        assert_eq!(r.to_string(), "NPORT/nport_holdings");
        let reg = SchemaRegistry::builtin();
        assert!(Route::checked(&reg, FilingType::Adv, "nport_holdings").is_err());
        assert!(Route::checked(&reg, FilingType::Adv, "adv_entity").is_ok());
        assert!("nport_holdings".parse::<Route>().is_err());
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.cli_name().parse::<Strategy>().unwrap(), s);
        }
    }
}
