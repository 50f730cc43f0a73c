use super::{Route, RoutingError, RoutingOutcome, Strategy};
use crate::corpus::{FilingType, SchemaRegistry};
use crate::gateway::prompt::{self, Sections};
use crate::gateway::{ChatProvider, ChatRequest};
use crate::index::table_text;

/// `AGENT: persona` lines, one per agent.
pub fn agent_candidates(registry: &SchemaRegistry) -> String {
    registry
        .profiles()
        .iter()
        .map(|p| format!("{}: {}", p.filing_type.name(), p.persona))
        .collect::<Vec<_>>()
        .join("\n")
}

/// `table_id: description Fields: ...` lines for one agent.
pub fn table_candidates(registry: &SchemaRegistry, agent: FilingType) -> String {
    registry
        .tables_for(agent)
        .map(|t| format!("{}: {}", t.table_id, table_text(t)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Request for one routing stage (`agent` or `table`).
pub fn route_request(
    stage: &str,
    question: &str,
    candidates: &str,
    agent: Option<FilingType>,
    correction: Option<&str>,
) -> ChatRequest {
    let mut s = Sections::new().with("stage", stage).with("question", question);
    if let Some(a) = agent {
        s.push("agent", a.name());
    }
    s.push("candidates", candidates);
    if let Some(c) = correction {
        s.push("correction", c);
    }
    let system = if stage == "table" { "route_table" } else { "route_agent" };
    ChatRequest::new("route", prompt::system(system), s.render())
}

fn clean(token: &str) -> &str {
    token.trim().trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '.' | '*' | '[' | ']'))
}

/// Comma or newline separated agent names, each matched case-insensitively
/// and exactly against `allowed`. Duplicates are dropped.
pub fn parse_agent_reply(reply: &str, allowed: &[FilingType]) -> Option<Vec<FilingType>> {
    let mut out = Vec::new();
    for tok in reply.split([',', '\n', ';']).map(clean).filter(|t| !t.is_empty()) {
        let ft = allowed.iter().copied().find(|a| a.name().eq_ignore_ascii_case(tok))?;
        if !out.contains(&ft) {
            out.push(ft);
        }
    }
    (!out.is_empty()).then_some(out)
}

/// A single table id matched case-insensitively and exactly against `allowed`.
pub fn parse_table_reply<'a>(reply: &str, allowed: &[&'a str]) -> Option<&'a str> {
    let tok = clean(reply.lines().find(|l| !l.trim().is_empty())?);
    allowed.iter().copied().find(|t| t.eq_ignore_ascii_case(tok))
}

/// Two-stage generative routing. A reply outside the candidate list gets one
/// corrective reprompt; a second miss makes the outcome unroutable.
/// Provider errors are returned to the caller.
pub fn route_generative(
    query: &str,
    provider: &dyn ChatProvider,
    registry: &SchemaRegistry,
) -> Result<RoutingOutcome, RoutingError> {
    let names: Vec<&str> = FilingType::ALL.iter().map(|f| f.name()).collect();
    let cands = agent_candidates(registry);
    let mut reply = provider.complete(&route_request("agent", query, &cands, None, None))?.content;
    let mut agents = parse_agent_reply(&reply, &FilingType::ALL);
    if agents.is_none() {
        let correction = format!(
            "Your previous reply `{}` is not a candidate. Reply with names from: {}.",
            reply.trim(),
            names.join(", ")
        );
        reply = provider
            .complete(&route_request("agent", query, &cands, None, Some(&correction)))?
            .content;
        agents = parse_agent_reply(&reply, &FilingType::ALL);
    }
    let Some(agents) = agents else {
        return Ok(RoutingOutcome::unroutable(
            Strategy::Generative,
            format!("agent reply `{}` not in candidates", reply.trim()),
        ));
    };

    let mut routes = Vec::with_capacity(agents.len());
    for agent in agents {
        let tables: Vec<&str> = registry.tables_for(agent).map(|t| t.table_id.as_str()).collect();
        let cands = table_candidates(registry, agent);
        let mut reply =
            provider.complete(&route_request("table", query, &cands, Some(agent), None))?.content;
        let mut table = parse_table_reply(&reply, &tables);
        if table.is_none() {
            let correction = format!(
                "Your previous reply `{}` is not a candidate. Reply with one of: {}.",
                reply.trim(),
                tables.join(", ")
            );
            reply = provider
                .complete(&route_request("table", query, &cands, Some(agent), Some(&correction)))?
                .content;
            table = parse_table_reply(&reply, &tables);
        }
        match table {
            Some(t) => routes.push(Route::new(agent, t)),
            None => {
                return Ok(RoutingOutcome::unroutable(
                    Strategy::Generative,
                    format!("table reply `{}` not in candidates for {agent}", reply.trim()),
                ))
            }
        }
    }
    Ok(RoutingOutcome::routed(Strategy::Generative, routes))
}
