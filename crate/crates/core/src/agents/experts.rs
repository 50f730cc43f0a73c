//! Filing-type experts and the swarm intelligence gathered from them.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exec::retrieve;
use super::plan::{Filter, Plan};
use super::AgentError;
use crate::corpus::{AgentProfile, FilingType, ReconciledView, TableSchema, METADATA_COLUMNS};
use crate::index::{Embedder, EmbeddingVector, FlatIndex};
use crate::Scalar;

/// Cap on record ids kept per finding.
pub const SAMPLE_LIMIT: usize = 10;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpertConstraints {
    pub filters: Vec<Filter>,
    /// Ranked by the expert's table-scope kNN when present.
    pub free_text: Option<String>,
    pub k: usize,
}

/// Records one expert found in one of its tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertHit {
    pub table_id: String,
    /// Matching record ids; nearest first when free text was given.
    pub record_ids: Vec<String>,
    /// Filter fields the table does not have. A table with missing fields
    /// matches nothing.
    pub missing_fields: Vec<String>,
}

fn has_column(schema: &TableSchema, field: &str) -> bool {
    schema.field(field).is_some() || METADATA_COLUMNS.iter().any(|(n, _)| *n == field)
}

/// Runs one expert over each of its tables. Filters select exact matches;
/// free text ranks them (or, without filters, selects the top `k`) by the
/// table index.
pub fn expert_search<T: Scalar>(
    expert: &AgentProfile,
    constraints: &ExpertConstraints,
    view: &ReconciledView,
    table_indexes: &BTreeMap<String, FlatIndex<T>>,
    embedder: &dyn Embedder,
) -> Result<Vec<ExpertHit>, AgentError> {
    let query: Option<Vec<T>> = match &constraints.free_text {
        Some(text) => Some(EmbeddingVector::<T>::from_f64(&embedder.embed(text)?)?.into_inner()),
        None => None,
    };
    let k = constraints.k.max(1);
    let mut hits = Vec::new();
    for schema in view.registry().tables_for(expert.filing_type) {
        let missing: Vec<String> = constraints
            .filters
            .iter()
            .filter(|f| !has_column(schema, &f.field))
            .map(|f| f.field.clone())
            .collect();
        if !missing.is_empty() {
            hits.push(ExpertHit { table_id: schema.table_id.clone(), record_ids: vec![], missing_fields: missing });
            continue;
        }
        let index = table_indexes.get(&schema.table_id);
        let record_ids = match (&query, index) {
            (Some(q), Some(index)) if !index.is_empty() => {
                if constraints.filters.is_empty() {
                    index.knn(q, k)?.into_iter().map(|n| n.record_id).collect()
                } else {
                    let allowed: HashSet<&str> = retrieve(view, &schema.table_id, &constraints.filters)
                        .into_iter()
                        .map(|r| r.record_id.as_str())
                        .collect();
                    index
                        .knn(q, index.len())?
                        .into_iter()
                        .filter(|n| allowed.contains(n.record_id.as_str()))
                        .take(k)
                        .map(|n| n.record_id)
                        .collect()
                }
            }
            _ => retrieve(view, &schema.table_id, &constraints.filters)
                .into_iter()
                .map(|r| r.record_id.clone())
                .collect(),
        };
        hits.push(ExpertHit { table_id: schema.table_id.clone(), record_ids, missing_fields: vec![] });
    }
    Ok(hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Consulted for a retrieve step of the draft plan.
    PlanStep,
    /// Consulted because its persona overlaps the question wording.
    Lexical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub filing_type: FilingType,
    pub table_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_id: Option<String>,
    pub trigger: Trigger,
    pub matched_record_count: usize,
    pub sample_record_ids: Vec<String>,
    pub missing_fields: Vec<String>,
}

impl Finding {
    fn from_hit(ft: FilingType, hit: ExpertHit, step_id: Option<String>, trigger: Trigger) -> Finding {
        Finding {
            filing_type: ft,
            table_id: hit.table_id,
            step_id,
            trigger,
            matched_record_count: hit.record_ids.len(),
            sample_record_ids: hit.record_ids.into_iter().take(SAMPLE_LIMIT).collect(),
            missing_fields: hit.missing_fields,
        }
    }

    /// One line of the findings section sent to the planner.
    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "step={} agent={} table={} matched={} trigger={}",
            self.step_id.as_deref().unwrap_or("-"),
            self.filing_type.name(),
            self.table_id,
            self.matched_record_count,
            match self.trigger {
                Trigger::PlanStep => "plan",
                Trigger::Lexical => "lexical",
            }
        );
        if !self.missing_fields.is_empty() {
            line.push_str(&format!(" missing={}", self.missing_fields.join(",")));
        }
        if !self.sample_record_ids.is_empty() {
            line.push_str(&format!(" sample={}", self.sample_record_ids.join(",")));
        }
        line
    }
}

/// Harmonized expert findings for one draft plan.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SwarmIntelligence {
    pub findings: Vec<Finding>,
}

impl SwarmIntelligence {
    pub fn summary(&self) -> String {
        self.findings.iter().map(Finding::summary_line).collect::<Vec<_>>().join("\n")
    }

    pub fn for_step<'a>(&'a self, step_id: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.step_id.as_deref() == Some(step_id))
    }
}

const GENERIC_WORDS: [&str; 16] = [
    "form", "expert", "file", "filed", "filing", "report", "reports", "fund", "funds", "their",
    "with", "every", "other", "which", "annual", "information",
];

fn words(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .map(str::to_ascii_lowercase)
        .filter(|w| w.len() >= 4 && !GENERIC_WORDS.contains(&w.as_str()))
        .collect()
}

/// Experts not referenced by the plan whose persona shares at least two
/// content words with the question.
pub fn lexical_experts<'a>(
    question: &str,
    profiles: &'a [AgentProfile],
    exclude: &BTreeSet<FilingType>,
) -> Vec<&'a AgentProfile> {
    let q = words(question);
    profiles
        .iter()
        .filter(|p| !exclude.contains(&p.filing_type))
        .filter(|p| words(&p.persona).intersection(&q).count() >= 2)
        .collect()
}

/// Consults the expert of every retrieve step (with that step's filters, over
/// all of the expert's tables) and any lexically triggered experts (free text
/// only). Experts run in parallel; findings keep plan order.
pub fn gather_swarm_intelligence<T: Scalar>(
    plan: &Plan,
    question: &str,
    view: &ReconciledView,
    table_indexes: &BTreeMap<String, FlatIndex<T>>,
    embedder: &dyn Embedder,
    k: usize,
) -> Result<SwarmIntelligence, AgentError> {
    let registry = view.registry();
    let mut tasks: Vec<(FilingType, Option<String>, Trigger, ExpertConstraints)> = plan
        .retrievals()
        .map(|(id, agent, _, filters)| {
            (
                agent,
                Some(id.to_string()),
                Trigger::PlanStep,
                ExpertConstraints { filters: filters.to_vec(), free_text: None, k },
            )
        })
        .collect();
    let planned: BTreeSet<FilingType> = tasks.iter().map(|t| t.0).collect();
    for p in lexical_experts(question, registry.profiles(), &planned) {
        tasks.push((
            p.filing_type,
            None,
            Trigger::Lexical,
            ExpertConstraints { filters: vec![], free_text: Some(question.to_string()), k },
        ));
    }
    let results: Vec<Vec<Finding>> = tasks
        .into_par_iter()
        .map(|(ft, step, trigger, constraints)| {
            let hits = expert_search(registry.profile(ft), &constraints, view, table_indexes, embedder)?;
            Ok(hits.into_iter().map(|h| Finding::from_hit(ft, h, step.clone(), trigger)).collect())
        })
        .collect::<Result<_, AgentError>>()?;
    Ok(SwarmIntelligence { findings: results.into_iter().flatten().collect() })
}
