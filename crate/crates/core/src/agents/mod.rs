//! Query screening, decomposition, planning, expert search and execution.
//!
//! [`Pipeline::run`] chains the stages: screen the question (rewriting it
//! while the classifier calls it hallucinatory), split it into sub-queries,
//! draft a plan from memory or few-shot prompting, consult the experts named
//! by the draft, revise the plan against their findings and execute it.

mod exec;
mod experts;
mod memory;
mod pipeline;
mod plan;
mod planner;

pub use exec::{
    execute_plan, filter_matches, render_value, retrieve, Answer, AnswerType, AnswerValue, ExecError,
};
pub use experts::{
    expert_search, gather_swarm_intelligence, lexical_experts, ExpertConstraints, ExpertHit, Finding,
    SwarmIntelligence, Trigger, SAMPLE_LIMIT,
};
pub use memory::{normalize_query, LongTermMemory, MemoryEntry};
pub use pipeline::{Pipeline, PipelineConfig, PipelineRun};
pub use plan::{
    join_columns, AggFunction, ArithOp, Filter, FilterOp, JoinKey, OutputType, Plan, PlanError,
    PlanStep, Provenance, StepKind, ValidatedPlan,
};
pub use planner::{
    draft_plan, exemplars, fallback_plan, plan_request, replan_request, revise_plan, DraftOutcome, Exemplar,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{classify_quality, prompt, ChatProvider, ChatRequest, GatewayError, QualityLabel, QualityVerdict};
use crate::index::IndexError;
use crate::routing::RoutingError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("query text is empty")]
    EmptyQuery,
    #[error("max_iters must be at least 1")]
    InvalidMaxIters,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("memory: {0}")]
    Memory(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryOrigin {
    User,
    Rewritten,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub origin: QueryOrigin,
    /// Every text this query has had, oldest first; the last is `text`.
    pub lineage: Vec<String>,
}

impl Query {
    pub fn new(text: &str) -> Result<Query, AgentError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(AgentError::EmptyQuery);
        }
        Ok(Query { text: text.into(), origin: QueryOrigin::User, lineage: vec![text.into()] })
    }

    fn rewritten(&self, text: String) -> Query {
        let mut lineage = self.lineage.clone();
        lineage.push(text.clone());
        Query { text, origin: QueryOrigin::Rewritten, lineage }
    }

    pub fn rewrites(&self) -> usize {
        self.lineage.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenResult {
    pub query: Query,
    pub verdict: QualityVerdict,
    /// The iteration cap was reached with the query still judged hallucinatory.
    pub flagged: bool,
}

/// Classifies the query and rewrites it while it is judged hallucinatory,
/// at most `max_iters` times.
pub fn screen_query(
    query: Query,
    provider: &dyn ChatProvider,
    max_iters: usize,
) -> Result<ScreenResult, AgentError> {
    if max_iters == 0 {
        return Err(AgentError::InvalidMaxIters);
    }
    let mut query = query;
    let mut verdict = classify_quality(provider, &query.text)?;
    while verdict.label == QualityLabel::Hallucinatory && query.rewrites() < max_iters {
        let request = ChatRequest::new(
            "rewrite",
            prompt::system("rewrite"),
            prompt::Sections::new().with("question", query.text.as_str()).render(),
        );
        let text = provider.complete(&request)?.content.trim().to_string();
        if text.is_empty() {
            break;
        }
        query = query.rewritten(text);
        verdict = classify_quality(provider, &query.text)?;
    }
    let flagged = verdict.label == QualityLabel::Hallucinatory;
    Ok(ScreenResult { query, verdict, flagged })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuery {
    pub text: String,
    pub index: usize,
}

/// Ordered sub-queries; indexes run 0, 1, ... in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuerySet {
    items: Vec<SubQuery>,
}

impl SubQuerySet {
    /// `None` when `texts` is empty.
    pub fn new<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Option<SubQuerySet> {
        let items: Vec<SubQuery> =
            texts.into_iter().enumerate().map(|(index, t)| SubQuery { text: t.into(), index }).collect();
        (!items.is_empty()).then_some(SubQuerySet { items })
    }

    pub fn items(&self) -> &[SubQuery] {
        &self.items
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|q| q.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn strip_enumeration(line: &str) -> &str {
    let line = line.trim().trim_start_matches(['-', '*', '•']).trim_start();
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && line[digits..].starts_with(['.', ')']) {
        line[digits + 1..].trim_start()
    } else {
        line
    }
}

/// Splits a query into ordered sub-queries (tag `decompose`), one per reply
/// line. An empty reply keeps the query whole.
pub fn decompose(query: &Query, provider: &dyn ChatProvider) -> Result<SubQuerySet, AgentError> {
    let request = ChatRequest::new(
        "decompose",
        prompt::system("decompose"),
        prompt::Sections::new().with("question", query.text.as_str()).render(),
    );
    let reply = provider.complete(&request)?.content;
    let lines = reply.lines().map(strip_enumeration).filter(|l| !l.is_empty());
    Ok(SubQuerySet::new(lines).unwrap_or_else(|| {
        log::warn!("empty decomposition for `{}`; keeping the query whole", query.text);
        SubQuerySet::new([query.text.as_str()]).expect("one item")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{DeterministicProvider, Fixture, ScriptedProvider};

    #[test]
    fn screening_rewrites_until_clean() {
        let p = DeterministicProvider::new();
        let r = screen_query(Query::new("the regulatory AUM for adviser ADV-0003").unwrap(), &p, 3).unwrap();
        assert_eq!(r.query.lineage.len(), 2);
        assert_eq!(r.query.origin, QueryOrigin::Rewritten);
        assert!(r.query.text.starts_with("Get "));
        assert!(!r.flagged);

        let clean = screen_query(Query::new("Get the AUM for adviser ADV-0003").unwrap(), &p, 3).unwrap();
        assert_eq!(clean.query.lineage.len(), 1);
        assert_eq!(clean.query.origin, QueryOrigin::User);
    }

    #[test]
    fn screening_respects_the_cap() {
        // a provider that never stops calling the query hallucinatory
        let q = "nonsense words";
        let mut fixtures = Vec::new();
        let mut text = q.to_string();
        for i in 0..6 {
            let classify = ChatRequest::new(
                "classify",
                prompt::system("classify"),
                prompt::Sections::new().with("question", text.as_str()).render(),
            );
            fixtures.push(Fixture::for_request(&classify, "hallucinatory 0.9"));
            let rewrite = ChatRequest::new(
                "rewrite",
                prompt::system("rewrite"),
                prompt::Sections::new().with("question", text.as_str()).render(),
            );
            let next = format!("{q} v{i}");
            fixtures.push(Fixture::for_request(&rewrite, &next));
            text = next;
        }
        let p = ScriptedProvider::new(fixtures);
        let r = screen_query(Query::new(q).unwrap(), &p, 3).unwrap();
        assert_eq!(r.query.rewrites(), 3);
        assert!(r.flagged);
        assert!(matches!(screen_query(Query::new(q).unwrap(), &p, 0), Err(AgentError::InvalidMaxIters)));
    }

    #[test]
    fn decomposition_lines() {
        let p = DeterministicProvider::new();
        let q = Query::new("Get the country level AUM of funds managed by adviser ADV-0002 for period 2024-03-31").unwrap();
        let s = decompose(&q, &p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.items()[1].index, 1);
        assert_eq!(s.items()[0].text, "Get all funds managed by investment adviser ADV-0002 for period 2024-03-31");
        assert_eq!(s.items()[1].text, q.text);
        assert_eq!(strip_enumeration("2) Get it"), "Get it");
        assert!(matches!(Query::new("  "), Err(AgentError::EmptyQuery)));
    }
}
