//! Plan drafting (memory, few-shot prompting, one corrective reprompt,
//! routing fallback) and revision against expert findings.

use std::sync::OnceLock;

use serde::Deserialize;

use super::experts::SwarmIntelligence;
use super::memory::LongTermMemory;
use super::plan::{Plan, PlanError, PlanStep, Provenance, StepKind};
use super::{AgentError, Query, SubQuerySet};
use crate::corpus::SchemaRegistry;
use crate::gateway::prompt::{self, Sections};
use crate::gateway::{ChatProvider, ChatRequest};
use crate::routing::route_generative;

#[derive(Debug, Clone, Deserialize)]
pub struct Exemplar {
    #[serde(default)]
    pub template: Option<String>,
    pub question: String,
    pub plan: Plan,
    /// Why a negative exemplar is wrong.
    #[serde(default)]
    pub reason: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ExemplarFile {
    positive: Vec<Exemplar>,
    negative: Vec<Exemplar>,
}

const EXEMPLARS: &str = include_str!("../../assets/plan_examples.json");

/// Positive and negative few-shot exemplars shown to the planner.
pub fn exemplars() -> (&'static [Exemplar], &'static [Exemplar]) {
    static FILE: OnceLock<ExemplarFile> = OnceLock::new();
    let f = FILE.get_or_init(|| serde_json::from_str(EXEMPLARS).expect("plan_examples.json parses"));
    (&f.positive, &f.negative)
}

fn schema_lines(registry: &SchemaRegistry) -> String {
    registry
        .tables()
        .iter()
        .map(|t| {
            let fields: Vec<String> = t.fields.iter().map(|f| format!("{}({:?})", f.name, f.kind).to_lowercase()).collect();
            format!("{}/{}: {}", t.filing_type.name(), t.table_id, fields.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Planning request (tag `plan`).
pub fn plan_request(
    question: &str,
    subqueries: &SubQuerySet,
    registry: &SchemaRegistry,
    correction: Option<&str>,
) -> ChatRequest {
    let mut s = Sections::new().with("question", question).with(
        "subqueries",
        subqueries.items().iter().map(|q| format!("q{}: {}", q.index, q.text)).collect::<Vec<_>>().join("\n"),
    );
    s.push("schemas", schema_lines(registry));
    let (positive, negative) = exemplars();
    for ex in positive {
        s.push("example", format!("question: {}\nplan: {}", ex.question, ex.plan.steps_json()));
    }
    for ex in negative {
        s.push(
            "negative_example",
            format!(
                "question: {}\nplan: {}\nwhy: {}",
                ex.question,
                ex.plan.steps_json(),
                ex.reason.as_deref().unwrap_or("")
            ),
        );
    }
    if let Some(c) = correction {
        s.push("correction", c);
    }
    ChatRequest::new("plan", prompt::system("plan"), s.render())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftOutcome {
    pub plan: Plan,
    pub from_memory: bool,
    pub reprompted: bool,
    /// Neither reply produced a valid plan; a routing based plan was used.
    pub fallback: bool,
}

fn parse_valid(text: &str, registry: &SchemaRegistry) -> Result<Plan, PlanError> {
    let plan = Plan::from_text(text)?;
    plan.validate(registry)?;
    Ok(plan)
}

/// Retrieve-and-return plan over the first generatively routed table, or the
/// first registry table when the query is unroutable.
pub fn fallback_plan(
    question: &str,
    provider: &dyn ChatProvider,
    registry: &SchemaRegistry,
) -> Result<Plan, AgentError> {
    let outcome = route_generative(question, provider, registry)?;
    let (agent, table) = match outcome.predicted.first() {
        Some(r) => (r.agent, r.table.clone()),
        None => {
            let t = &registry.tables()[0];
            (t.filing_type, t.table_id.clone())
        }
    };
    Ok(Plan::new(vec![
        PlanStep::new("s1", StepKind::Retrieve { agent, table, filters: vec![] }),
        PlanStep::new("s2", StepKind::Return { input: "s1".into(), columns: vec![] }),
    ]))
}

/// Draft plan for a screened query: a memory hit is returned without any
/// gateway call; otherwise the provider is prompted, reprompted once with the
/// validation error, and finally replaced by [`fallback_plan`].
pub fn draft_plan(
    query: &Query,
    subqueries: &SubQuerySet,
    provider: &dyn ChatProvider,
    registry: &SchemaRegistry,
    memory: &LongTermMemory,
) -> Result<DraftOutcome, AgentError> {
    if let Some(plan) = memory.get(&query.text) {
        return Ok(DraftOutcome { plan, from_memory: true, reprompted: false, fallback: false });
    }
    let source = subqueries.len().saturating_sub(1);
    let reply = provider.complete(&plan_request(&query.text, subqueries, registry, None))?.content;
    let err = match parse_valid(&reply, registry) {
        Ok(mut plan) => {
            plan.source_subquery = source;
            return Ok(DraftOutcome { plan, from_memory: false, reprompted: false, fallback: false });
        }
        Err(e) => e,
    };
    let correction = format!("Your previous plan was rejected: {err}. Reply with one corrected JSON plan.");
    let reply = provider.complete(&plan_request(&query.text, subqueries, registry, Some(&correction)))?.content;
    match parse_valid(&reply, registry) {
        Ok(mut plan) => {
            plan.source_subquery = source;
            Ok(DraftOutcome { plan, from_memory: false, reprompted: true, fallback: false })
        }
        Err(e) => {
            log::warn!("planner failed twice for `{}` ({e}); using a routing fallback", query.text);
            let mut plan = fallback_plan(&query.text, provider, registry)?;
            plan.source_subquery = source;
            Ok(DraftOutcome { plan, from_memory: false, reprompted: true, fallback: true })
        }
    }
}

/// Revision request (tag `replan`).
pub fn replan_request(question: &str, draft: &Plan, si: &SwarmIntelligence) -> ChatRequest {
    let s = Sections::new()
        .with("question", question)
        .with("plan", draft.steps_json())
        .with("findings", si.summary());
    ChatRequest::new("replan", prompt::system("replan"), s.render())
}

/// Revises `draft` against the findings. An unparseable or invalid revision
/// keeps the draft. The resulting plan is stored in memory under the query.
pub fn revise_plan(
    query: &Query,
    draft: &Plan,
    si: &SwarmIntelligence,
    provider: &dyn ChatProvider,
    registry: &SchemaRegistry,
    memory: &LongTermMemory,
) -> Result<Plan, AgentError> {
    let reply = provider.complete(&replan_request(&query.text, draft, si))?.content;
    let plan = match parse_valid(&reply, registry) {
        Ok(mut plan) => {
            plan.provenance = Provenance::Optimized;
            plan.source_subquery = draft.source_subquery;
            plan
        }
        Err(e) => {
            log::warn!("revision rejected for `{}` ({e}); keeping the draft", query.text);
            draft.clone()
        }
    };
    memory.store(&query.text, &plan)?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{DeterministicProvider, Fixture, ScriptedProvider};

    #[test]
    fn exemplars_are_valid_plans() {
        let reg = SchemaRegistry::builtin();
        let (pos, neg) = exemplars();
        assert_eq!(pos.len(), 7);
        assert!(!neg.is_empty());
        for ex in pos {
            ex.plan.validate(&reg).unwrap_or_else(|e| panic!("{}: {e}", ex.question));
        }
    }

    #[test]
    fn two_bad_replies_fall_back_to_routing() {
        let reg = SchemaRegistry::builtin();
        let q = Query::new("Get the regulatory AUM for adviser ADV-0001 for period 2024-03-31").unwrap();
        let subs = SubQuerySet::new([q.text.as_str()]).unwrap();
        let first = plan_request(&q.text, &subs, &reg, None);
        let err = Plan::from_text("garbage").unwrap_err();
        let correction = format!("Your previous plan was rejected: {err}. Reply with one corrected JSON plan.");
        let second = plan_request(&q.text, &subs, &reg, Some(&correction));
        // route requests are answered by the deterministic rules
        let det = DeterministicProvider::new();
        let mut fixtures = vec![Fixture::for_request(&first, "garbage"), Fixture::for_request(&second, "garbage")];
        let agent = crate::routing::route_request("agent", &q.text, &crate::routing::agent_candidates(&reg), None, None);
        fixtures.push(Fixture::for_request(&agent, det.complete(&agent).unwrap().content));
        let table = crate::routing::route_request(
            "table",
            &q.text,
            &crate::routing::table_candidates(&reg, crate::corpus::FilingType::Adv),
            Some(crate::corpus::FilingType::Adv),
            None,
        );
        fixtures.push(Fixture::for_request(&table, det.complete(&table).unwrap().content));
        let p = ScriptedProvider::new(fixtures);
        let out = draft_plan(&q, &subs, &p, &reg, &LongTermMemory::in_memory()).unwrap();
        assert!(out.fallback && out.reprompted);
        let StepKind::Retrieve { table, .. } = &out.plan.steps[0].kind else { panic!() };
        assert_eq!(table, "adv_entity");
    }
}
