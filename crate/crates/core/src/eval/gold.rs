//! Perfect-knowledge provider and embedder built from benchmark gold data.
//! They bound what any provider or embedder could reach on a benchmark.

use std::collections::HashMap;
use std::time::Duration;

use crate::corpus::{FilingType, SchemaRegistry};
use crate::gateway::prompt::Sections;
use crate::gateway::{ChatProvider, ChatRequest, ChatResponse, DeterministicProvider, GatewayError, ProviderKind};
use crate::index::{persona_text, table_text, IndexError, LookupEmbedder};
use crate::questbench::{canonical_plan, QuestionInstance};
use crate::routing::{format_routes, Route};

struct Gold {
    template_id: String,
    slots: crate::questbench::Slots,
    routes: Vec<Route>,
}

/// Answers every request about a benchmark question with its gold route and
/// canonical plan. Paraphrase requests go to the deterministic rules.
pub struct GoldResponder {
    by_text: HashMap<String, Gold>,
    paraphraser: DeterministicProvider,
}

impl GoldResponder {
    pub fn new<'a>(instances: impl IntoIterator<Item = &'a QuestionInstance>) -> Self {
        let by_text = instances
            .into_iter()
            .map(|i| {
                let gold = Gold { template_id: i.template_id.clone(), slots: i.slots.clone(), routes: i.gold_routes.clone() };
                (i.text.trim().to_string(), gold)
            })
            .collect();
        GoldResponder { by_text, paraphraser: DeterministicProvider::new() }
    }

    fn gold(&self, question: &str) -> Result<&Gold, GatewayError> {
        self.by_text
            .get(question.trim())
            .ok_or_else(|| GatewayError::Provider(format!("no gold data for `{question}`")))
    }

    fn reply(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let s = Sections::parse(request.last_user());
        let question = s.get("question").unwrap_or("").trim();
        match request.tag.as_str() {
            "classify" => Ok("non_hallucinatory 1.0".into()),
            "rewrite" | "decompose" => Ok(question.to_string()),
            "route" => {
                let gold = self.gold(question)?;
                if s.get("stage").map(str::trim) == Some("table") {
                    let agent = s.get("agent").and_then(FilingType::parse_loose);
                    let route = gold.routes.iter().find(|r| Some(r.agent) == agent);
                    Ok(route.map(|r| r.table.clone()).unwrap_or_default())
                } else {
                    let mut agents: Vec<&str> = Vec::new();
                    for r in &gold.routes {
                        if !agents.contains(&r.agent.name()) {
                            agents.push(r.agent.name());
                        }
                    }
                    Ok(agents.join(", "))
                }
            }
            "swarm" => {
                let gold = self.gold(question)?;
                Ok(format!("ROUTE: {}\nREASON: gold route", format_routes(&gold.routes)))
            }
            "plan" => {
                let gold = self.gold(question)?;
                canonical_plan(&gold.template_id, &gold.slots)
                    .map(|p| p.steps_json())
                    .map_err(|e| GatewayError::Provider(e.to_string()))
            }
            "replan" => Ok(s.get("plan").unwrap_or("").to_string()),
            "variegate" => self.paraphraser.complete(request).map(|r| r.content),
            other => Err(GatewayError::InvalidRequest(format!("no gold rule for tag `{other}`"))),
        }
    }
}

impl ChatProvider for GoldResponder {
    fn id(&self) -> &str {
        "gold"
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Deterministic
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        Ok(ChatResponse {
            content: self.reply(request)?,
            provider_id: "gold".into(),
            latency: Duration::ZERO,
            from_cache: false,
        })
    }
}

/// Embedder under which embedding routing is exact: persona `i` maps to
/// `e_i`, table `j` to `e_{6+j}` and a question to the sum of its first gold
/// route's two basis vectors.
pub fn oracle_route_embedder<'a>(
    registry: &SchemaRegistry,
    instances: impl IntoIterator<Item = &'a QuestionInstance>,
) -> Result<LookupEmbedder, IndexError> {
    let agents = FilingType::ALL.len();
    let dim = agents + registry.tables().len();
    let table_slot = |table: &str| registry.tables().iter().position(|t| t.table_id == table);
    let mut e = LookupEmbedder::new(dim, "oracle-route");
    for p in registry.profiles() {
        e.insert(persona_text(p), LookupEmbedder::one_hot(dim, p.filing_type.ordinal()))?;
    }
    for (j, t) in registry.tables().iter().enumerate() {
        e.insert(table_text(t), LookupEmbedder::one_hot(dim, agents + j))?;
    }
    for i in instances {
        let Some(route) = i.gold_routes.first() else { continue };
        let Some(j) = table_slot(&route.table) else { continue };
        let mut v = LookupEmbedder::one_hot(dim, route.agent.ordinal());
        v[agents + j] = 1.0;
        e.insert(i.text.clone(), v)?;
    }
    Ok(e)
}
