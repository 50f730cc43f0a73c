use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generative::agent_candidates;
use super::{format_routes, Route, RoutingError, RoutingOutcome, Strategy};
use crate::corpus::SchemaRegistry;
use crate::gateway::prompt::{self, Sections};
use crate::gateway::{ChatProvider, ChatRequest, GatewayError};
use crate::index::table_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub n_agents: usize,
    pub max_timesteps: usize,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig { n_agents: 5, max_timesteps: 3, seed: 0 }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), RoutingError> {
        if self.n_agents == 0 {
            return Err(RoutingError::InvalidSwarmConfig("n_agents must be at least 1".into()));
        }
        if self.max_timesteps < 2 {
            return Err(RoutingError::InvalidSwarmConfig("max_timesteps must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub member: usize,
    pub timestep: usize,
    /// Empty when the reply could not be parsed into valid routes.
    pub routes: Vec<Route>,
    pub reasoning: String,
}

impl Proposal {
    pub fn is_valid(&self) -> bool {
        !self.routes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteCount {
    pub routes: String,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmTranscript {
    pub rounds: Vec<Vec<Proposal>>,
    /// Whether the last round was unanimous.
    pub unanimous: bool,
    /// Whether the run stopped before `max_timesteps`.
    pub early_stop: bool,
    /// Final-round tally, most votes first.
    pub votes: Vec<VoteCount>,
    pub rule: String,
}

impl SwarmTranscript {
    pub fn proposal_count(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }
}

const CONSENSUS_RULE: &str = "stop at the first unanimous round; otherwise plurality of the final round, ties to the lexicographically smallest (agent, table) sequence";

const MEMBER_STYLES: [&str; 5] = [
    "You read the question literally and trust explicit filing names.",
    "You focus on the entity type named in the question: manager, adviser, trust or fund.",
    "You focus on the quantity requested and which filing reports it.",
    "You look for the table whose fields cover every requested column.",
    "You double-check whether the question spans more than one filing.",
];

/// Per-member variation key derived from the swarm seed.
pub fn variation_key(seed: u64, member: usize) -> String {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((member as u64).to_le_bytes());
    hex::encode(&h.finalize()[..8])
}

fn tables_section(registry: &SchemaRegistry) -> String {
    registry
        .tables()
        .iter()
        .map(|t| format!("{}/{}: {}", t.filing_type.name(), t.table_id, table_text(t)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn history_section(rounds: &[Vec<Proposal>]) -> String {
    let mut lines = Vec::new();
    for round in rounds {
        for p in round {
            let routes = if p.is_valid() { format_routes(&p.routes) } else { "none".into() };
            lines.push(format!(
                "member {} round {}: ROUTE: {} REASON: {}",
                p.member, p.timestep, routes, p.reasoning
            ));
        }
    }
    lines.join("\n")
}

/// Request for one swarm member at one timestep.
pub fn swarm_request(
    query: &str,
    registry: &SchemaRegistry,
    config: &SwarmConfig,
    member: usize,
    timestep: usize,
    history: &[Vec<Proposal>],
) -> ChatRequest {
    let mut s = Sections::new()
        .with("member", format!("{member}: {}", MEMBER_STYLES[member % MEMBER_STYLES.len()]))
        .with("variation", variation_key(config.seed, member))
        .with("round", timestep.to_string())
        .with("question", query)
        .with("agents", agent_candidates(registry))
        .with("tables", tables_section(registry));
    if !history.is_empty() {
        s.push("history", history_section(history));
    }
    ChatRequest::new("swarm", prompt::system("swarm"), s.render())
}

/// Parses `ROUTE: A/t1, B/t2` and `REASON: ...` lines. Routes must exist in
/// the registry; any invalid route invalidates the proposal.
pub fn parse_proposal(
    reply: &str,
    registry: &SchemaRegistry,
    member: usize,
    timestep: usize,
) -> Proposal {
    let field = |key: &str| {
        reply
            .lines()
            .find_map(|l| l.trim().strip_prefix(key).map(|r| r.trim().to_string()))
    };
    let reasoning = field("REASON:").unwrap_or_default();
    let routes = field("ROUTE:")
        .and_then(|line| {
            line.split(',')
                .map(|r| {
                    let r: Route = r.parse().ok()?;
                    Route::checked(registry, r.agent, &r.table).ok()
                })
                .collect::<Option<Vec<Route>>>()
        })
        .unwrap_or_default();
    Proposal { member, timestep, routes, reasoning }
}

type RouteKey = Vec<(&'static str, String)>;

fn tally(round: &[Proposal]) -> Vec<(Vec<Route>, usize)> {
    let mut counts: BTreeMap<RouteKey, (Vec<Route>, usize)> = BTreeMap::new();
    for p in round.iter().filter(|p| p.is_valid()) {
        let key = p.routes.iter().map(|r| (r.agent.name(), r.table.clone())).collect();
        counts.entry(key).or_insert_with(|| (p.routes.clone(), 0)).1 += 1;
    }
    // BTreeMap order is the lexicographic tie-break; a stable sort keeps it
    let mut out: Vec<(Vec<Route>, usize)> = counts.into_values().collect();
    out.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
    out
}

/// Swarm consensus routing. Members propose independently at timestep 0 and
/// see every earlier proposal afterwards. Provider failures end the run as
/// unroutable, except fixture misses, which are returned as errors.
pub fn route_swarm(
    query: &str,
    provider: &dyn ChatProvider,
    registry: &SchemaRegistry,
    config: &SwarmConfig,
) -> Result<RoutingOutcome, RoutingError> {
    config.validate()?;
    let mut rounds: Vec<Vec<Proposal>> = Vec::new();
    let mut unanimous = false;
    for t in 0..config.max_timesteps {
        let mut round = Vec::with_capacity(config.n_agents);
        for m in 0..config.n_agents {
            let request = swarm_request(query, registry, config, m, t, &rounds);
            let reply = match provider.complete(&request) {
                Ok(r) => r.content,
                Err(e @ GatewayError::FixtureMiss { .. }) => return Err(e.into()),
                Err(e) => {
                    let mut out = RoutingOutcome::unroutable(Strategy::Swarm, e.to_string());
                    rounds.push(round);
                    out.transcript = Some(SwarmTranscript {
                        rounds,
                        unanimous: false,
                        early_stop: false,
                        votes: Vec::new(),
                        rule: CONSENSUS_RULE.into(),
                    });
                    return Ok(out);
                }
            };
            round.push(parse_proposal(&reply, registry, m, t));
        }
        unanimous = round.iter().all(Proposal::is_valid)
            && round.windows(2).all(|w| w[0].routes == w[1].routes);
        rounds.push(round);
        if unanimous {
            break;
        }
    }
    let votes = tally(rounds.last().expect("at least one round"));
    let transcript = SwarmTranscript {
        early_stop: rounds.len() < config.max_timesteps,
        unanimous,
        votes: votes
            .iter()
            .map(|(r, n)| VoteCount { routes: format_routes(r), votes: *n })
            .collect(),
        rounds,
        rule: CONSENSUS_RULE.into(),
    };
    let mut out = match votes.into_iter().next() {
        Some((routes, _)) => RoutingOutcome::routed(Strategy::Swarm, routes),
        None => RoutingOutcome::unroutable(Strategy::Swarm, "no valid proposal in the final round"),
    };
    out.transcript = Some(transcript);
    Ok(out)
}
