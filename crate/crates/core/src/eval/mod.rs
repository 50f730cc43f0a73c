//! Answer judging and the retrieval, routing and agentic evaluations.
//!
//! Every run is a pure function of its inputs: instances are evaluated in a
//! worker pool but collected in benchmark order, and each agentic question
//! gets a fresh long-term memory.

mod gold;
mod judge;
mod report;

pub use gold::{oracle_route_embedder, GoldResponder};
pub use judge::{judge_success, Tolerances};
pub use report::{
    AgenticRow, AgenticSection, EvalReport, InstanceOutcome, RetrievalRow, RetrievalSection, RoutingRow,
    RoutingSection, RunMetadata, SplitCell, Tally,
};

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{LongTermMemory, Pipeline, PipelineConfig};
use crate::corpus::{FilingType, GeneratorConfig, ReconciledView, SchemaRegistry};
use crate::gateway::{ChatProvider, Fixture, RecordingProvider, RemoteConfig};
use crate::index::{r_precision, Embedder, EmbeddingVector, FlatIndex, IndexError, ScopedIndexes};
use crate::questbench::{BenchConfig, Difficulty, QuestionInstance};
use crate::routing::{
    route_embedding, route_generative, route_swarm, score_routing, CreditMode, Route, RoutingError, RoutingOutcome,
    Strategy, SwarmConfig,
};
use crate::Scalar;
use report::rows_by;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    #[default]
    Det,
    Scripted,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderChoice {
    #[default]
    Hash,
    Remote,
}

/// Everything a report depends on besides fixture contents. Serialized into
/// every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub embedder: EmbedderChoice,
    pub dim: usize,
    pub provider: ProviderChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<String>,
    /// Chat endpoint for the remote provider.
    pub remote: RemoteConfig,
    /// Embedding endpoint for the remote embedder.
    pub remote_embedding: RemoteConfig,
    pub strategies: Vec<Strategy>,
    pub swarm: SwarmConfig,
    pub bench: BenchConfig,
    pub pipeline: PipelineConfig,
    pub tolerances: Tolerances,
    pub credit: CreditMode,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            generator: GeneratorConfig::default(),
            embedder: EmbedderChoice::Hash,
            dim: 64,
            provider: ProviderChoice::Det,
            fixtures: None,
            remote: RemoteConfig::default(),
            remote_embedding: RemoteConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            swarm: SwarmConfig::default(),
            bench: BenchConfig::default(),
            pipeline: PipelineConfig::default(),
            tolerances: Tolerances::default(),
            credit: CreditMode::default(),
            threads: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn pool(&self) -> Result<ThreadPool, EvalError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| EvalError::Pool(e.to_string()))
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn top_ids<T: Scalar>(index: &FlatIndex<T>, q: &[T], k: usize) -> Result<Vec<String>, IndexError> {
    Ok(index.knn(q, k)?.into_iter().map(|n| n.record_id).collect())
}

/// R-Precision of every (question, gold route) pair at global, agent and
/// table scope, averaged per filing type. Relevant records are the
/// question's relevant records that live in the route's table.
pub fn run_retrieval_ablation<T: Scalar>(
    instances: &[QuestionInstance],
    view: &ReconciledView,
    indexes: &ScopedIndexes<T>,
    embedder: &dyn Embedder,
    pool: &ThreadPool,
) -> Result<RetrievalSection, EvalError> {
    let scored: Vec<Vec<(FilingType, [f64; 3])>> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| -> Result<_, EvalError> {
                let q = EmbeddingVector::<T>::from_f64(&embedder.embed(&inst.text)?)?.into_inner();
                let mut out = Vec::new();
                for route in &inst.gold_routes {
                    let relevant: HashSet<String> = inst
                        .relevant_record_ids
                        .iter()
                        .filter(|id| view.get(id).is_some_and(|r| r.table_id == route.table))
                        .cloned()
                        .collect();
                    if relevant.is_empty() {
                        continue;
                    }
                    let k = relevant.len();
                    let (Some(agent), Some(table)) = (indexes.agents.get(&route.agent), indexes.tables.get(&route.table))
                    else {
                        continue;
                    };
                    let g = r_precision(&top_ids(&indexes.global, &q, k)?, &relevant)?;
                    let a = r_precision(&top_ids(agent, &q, k)?, &relevant)?;
                    let t = r_precision(&top_ids(table, &q, k)?, &relevant)?;
                    out.push((route.agent, [g, a, t]));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut per: BTreeMap<FilingType, [Vec<f64>; 3]> = BTreeMap::new();
    let mut all: [Vec<f64>; 3] = Default::default();
    for (ft, s) in scored.into_iter().flatten() {
        let e = per.entry(ft).or_default();
        for i in 0..3 {
            e[i].push(s[i]);
            all[i].push(s[i]);
        }
    }
    let row = |filing: String, v: &[Vec<f64>; 3]| RetrievalRow {
        filing,
        queries: v[0].len(),
        global: mean(&v[0]),
        agent: mean(&v[1]),
        table: mean(&v[2]),
    };
    Ok(RetrievalSection {
        rows: per.iter().map(|(ft, v)| row(ft.name().into(), v)).collect(),
        overall: row("Overall".into(), &all),
    })
}

/// What a routing strategy needs besides the questions.
pub struct RoutingInputs<'a, T> {
    pub registry: &'a SchemaRegistry,
    pub provider: &'a dyn ChatProvider,
    pub embedder: &'a dyn Embedder,
    pub personas: &'a FlatIndex<T>,
    pub tables: &'a BTreeMap<FilingType, FlatIndex<T>>,
    pub swarm: SwarmConfig,
}

/// Routes one question; provider failures make it unroutable.
pub fn route_one<T: Scalar>(strategy: Strategy, question: &str, inputs: &RoutingInputs<'_, T>) -> RoutingOutcome {
    let result = match strategy {
        Strategy::EmbeddingRag => route_embedding(question, inputs.personas, inputs.tables, inputs.embedder),
        Strategy::Generative => route_generative(question, inputs.provider, inputs.registry),
        Strategy::Swarm => route_swarm(question, inputs.provider, inputs.registry, &inputs.swarm),
    };
    result.unwrap_or_else(|e| {
        log::warn!("{strategy} routing failed for `{question}`: {e}");
        RoutingOutcome::unroutable(strategy, e.to_string())
    })
}

/// Routing accuracy of one strategy on the easy, hard and combined splits.
/// Embedding routing predicts a single route, so it is scored on
/// single-route questions only.
pub fn run_routing<T: Scalar>(
    strategy: Strategy,
    instances: &[QuestionInstance],
    inputs: &RoutingInputs<'_, T>,
    credit: CreditMode,
    pool: &ThreadPool,
) -> Result<Vec<RoutingRow>, EvalError> {
    let eligible: Vec<&QuestionInstance> = instances
        .iter()
        .filter(|i| strategy != Strategy::EmbeddingRag || i.gold_routes.len() == 1)
        .collect();
    let outcomes: Vec<(Difficulty, (RoutingOutcome, Vec<Route>))> = pool.install(|| {
        eligible
            .par_iter()
            .map(|i| (i.difficulty, (route_one(strategy, &i.text, inputs), i.gold_routes.clone())))
            .collect()
    });
    let mut rows = Vec::new();
    for split in [Some(Difficulty::Easy), Some(Difficulty::Hard), None] {
        let samples: Vec<(RoutingOutcome, Vec<Route>)> = outcomes
            .iter()
            .filter(|(d, _)| split.is_none_or(|s| s == *d))
            .map(|(_, s)| s.clone())
            .collect();
        let s = score_routing(&samples, credit)?;
        rows.push(RoutingRow {
            strategy,
            split: split.map_or("overall".into(), |d| d.to_string()),
            samples: s.samples,
            unroutable: s.unroutable,
            agent_correct: s.agent_correct,
            joint_correct: s.joint_correct,
            acc_agent: s.acc_agent,
            acc_table_given_agent: s.acc_table_given_agent,
            acc_overall: s.acc_overall,
        });
    }
    Ok(rows)
}

/// Runs the full pipeline on every question and judges the final answer.
/// Pipeline and execution errors are recorded as failures.
#[allow(clippy::too_many_arguments)]
pub fn run_agentic<T: Scalar>(
    instances: &[QuestionInstance],
    view: &ReconciledView,
    provider: &dyn ChatProvider,
    table_indexes: &BTreeMap<String, FlatIndex<T>>,
    embedder: &dyn Embedder,
    config: &PipelineConfig,
    tolerances: &Tolerances,
    pool: &ThreadPool,
) -> AgenticSection {
    let outcomes: Vec<InstanceOutcome> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                let memory = LongTermMemory::in_memory();
                let pipeline = Pipeline { view, provider, memory: &memory, table_indexes, embedder, config: *config };
                let (success, fallback, error) = match pipeline.run(&inst.text) {
                    Ok(run) => match &run.answer {
                        Ok(a) => (judge_success(&a.value, &inst.gold_answer, tolerances), run.fallback, None),
                        Err(e) => (false, run.fallback, Some(e.clone())),
                    },
                    Err(e) => (false, false, Some(e.to_string())),
                };
                InstanceOutcome {
                    instance_id: inst.instance_id.clone(),
                    template_id: inst.template_id.clone(),
                    difficulty: inst.difficulty,
                    variant: inst.variant,
                    success,
                    fallback,
                    error,
                }
            })
            .collect()
    });
    summarize_agentic(instances, outcomes)
}

/// Aggregates per-question outcomes (same order as `instances`).
pub fn summarize_agentic(instances: &[QuestionInstance], outcomes: Vec<InstanceOutcome>) -> AgenticSection {
    let mut by_filing: BTreeMap<FilingType, SplitCell> = BTreeMap::new();
    let mut by_template: BTreeMap<String, SplitCell> = BTreeMap::new();
    let mut by_difficulty: BTreeMap<Difficulty, SplitCell> = BTreeMap::new();
    let mut overall = SplitCell::default();
    for (inst, o) in instances.iter().zip(&outcomes) {
        for r in &inst.gold_routes {
            by_filing.entry(r.agent).or_default().add(o.variant, o.success);
        }
        by_template.entry(o.template_id.clone()).or_default().add(o.variant, o.success);
        by_difficulty.entry(o.difficulty).or_default().add(o.variant, o.success);
        overall.add(o.variant, o.success);
    }
    AgenticSection {
        by_filing: rows_by(by_filing, |f| f.name().to_string()),
        by_template: rows_by(by_template, |t| t.clone()),
        by_difficulty: rows_by(by_difficulty, |d| d.to_string()),
        overall,
        outcomes,
    }
}

/// Fixtures that replay the gold responder for every generative and swarm
/// routing request and every agentic pipeline request on `instances`.
pub fn record_perfect_fixtures<T: Scalar>(
    instances: &[QuestionInstance],
    view: &ReconciledView,
    table_indexes: &BTreeMap<String, FlatIndex<T>>,
    embedder: &dyn Embedder,
    swarm: SwarmConfig,
    pipeline: &PipelineConfig,
    pool: &ThreadPool,
) -> Result<Vec<Fixture>, EvalError> {
    let recorder = RecordingProvider::new(GoldResponder::new(instances));
    let personas = FlatIndex::<T>::new(crate::index::IndexScope::Global, embedder.dim(), "unused");
    let inputs = RoutingInputs {
        registry: view.registry(),
        provider: &recorder,
        embedder,
        personas: &personas,
        tables: &BTreeMap::new(),
        swarm,
    };
    for s in [Strategy::Generative, Strategy::Swarm] {
        run_routing(s, instances, &inputs, CreditMode::default(), pool)?;
    }
    run_agentic(instances, view, &recorder, table_indexes, embedder, pipeline, &Tolerances::default(), pool);
    Ok(recorder.fixtures())
}
