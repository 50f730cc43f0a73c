use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::exec::{execute_plan, Answer};
use super::experts::{gather_swarm_intelligence, SwarmIntelligence};
use super::memory::LongTermMemory;
use super::plan::Plan;
use super::planner::{draft_plan, revise_plan};
use super::{decompose, screen_query, AgentError, Query, ScreenResult, SubQuerySet};
use crate::corpus::ReconciledView;
use crate::gateway::ChatProvider;
use crate::index::{Embedder, FlatIndex};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub max_screen_iters: usize,
    /// Neighbors kept per table in free-text expert searches.
    pub knn_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { max_screen_iters: 3, knn_k: 10 }
    }
}

/// Everything one question went through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub screen: ScreenResult,
    pub subqueries: SubQuerySet,
    pub draft: Plan,
    pub from_memory: bool,
    pub fallback: bool,
    pub swarm_intelligence: SwarmIntelligence,
    pub plan: Plan,
    /// Execution failures are part of the run, not pipeline errors.
    pub answer: Result<Answer, String>,
}

pub struct Pipeline<'a, T> {
    pub view: &'a ReconciledView,
    pub provider: &'a dyn ChatProvider,
    pub memory: &'a LongTermMemory,
    pub table_indexes: &'a BTreeMap<String, FlatIndex<T>>,
    pub embedder: &'a dyn Embedder,
    pub config: PipelineConfig,
}

impl<T: Scalar> Pipeline<'_, T> {
    pub fn run(&self, question: &str) -> Result<PipelineRun, AgentError> {
        let registry = self.view.registry();
        let screen = screen_query(Query::new(question)?, self.provider, self.config.max_screen_iters)?;
        let query = &screen.query;
        let subqueries = decompose(query, self.provider)?;
        let draft = draft_plan(query, &subqueries, self.provider, registry, self.memory)?;
        let (si, plan) = if draft.from_memory {
            (SwarmIntelligence::default(), draft.plan.clone())
        } else {
            let si = gather_swarm_intelligence(
                &draft.plan,
                &query.text,
                self.view,
                self.table_indexes,
                self.embedder,
                self.config.knn_k,
            )?;
            let plan = revise_plan(query, &draft.plan, &si, self.provider, registry, self.memory)?;
            (si, plan)
        };
        let answer = execute_plan(&plan, self.view).map_err(|e| e.to_string());
        Ok(PipelineRun {
            screen,
            subqueries,
            draft: draft.plan,
            from_memory: draft.from_memory,
            fallback: draft.fallback,
            swarm_intelligence: si,
            plan,
            answer,
        })
    }
}
