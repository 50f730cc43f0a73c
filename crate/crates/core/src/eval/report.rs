use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::questbench::{Difficulty, Variant};
use crate::routing::{CreditMode, Strategy};

/// Mean R-Precision of one filing type (or of all) at the three scopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRow {
    pub filing: String,
    /// (instance, gold route) pairs with at least one relevant record.
    pub queries: usize,
    pub global: f64,
    pub agent: f64,
    pub table: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSection {
    pub rows: Vec<RetrievalRow>,
    pub overall: RetrievalRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingRow {
    pub strategy: Strategy,
    /// `easy`, `hard` or `overall`.
    pub split: String,
    pub samples: usize,
    pub unroutable: usize,
    pub agent_correct: f64,
    pub joint_correct: f64,
    pub acc_agent: f64,
    pub acc_table_given_agent: f64,
    pub acc_overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingSection {
    pub credit: CreditMode,
    pub rows: Vec<RoutingRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub successes: usize,
    pub count: usize,
    pub rate: f64,
}

impl Tally {
    fn add(&mut self, success: bool) {
        self.count += 1;
        self.successes += success as usize;
        self.rate = self.successes as f64 / self.count as f64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitCell {
    pub templated: Tally,
    pub variegated: Tally,
    pub both: Tally,
}

impl SplitCell {
    pub(crate) fn add(&mut self, variant: Variant, success: bool) {
        match variant {
            Variant::Templated => self.templated.add(success),
            Variant::Variegated => self.variegated.add(success),
        }
        self.both.add(success);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgenticRow {
    pub group: String,
    pub cell: SplitCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub instance_id: String,
    pub template_id: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
    pub success: bool,
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgenticSection {
    /// One count per gold route, so questions spanning two filings count
    /// under both.
    pub by_filing: Vec<AgenticRow>,
    pub by_template: Vec<AgenticRow>,
    pub by_difficulty: Vec<AgenticRow>,
    pub overall: SplitCell,
    pub outcomes: Vec<InstanceOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub crate_version: String,
    pub registry_version: String,
    pub provider: String,
    pub embedder: String,
    pub raw_records: usize,
    pub reconciled_records: usize,
    pub instances: usize,
    pub templated: usize,
    pub variegated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub metadata: RunMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval: Option<RetrievalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing: Option<RoutingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agentic: Option<AgenticSection>,
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn tally(t: &Tally) -> String {
    if t.count == 0 {
        "-".into()
    } else {
        format!("{} ({}/{})", pct(t.rate), t.successes, t.count)
    }
}

pub(crate) fn rows_by<K: Ord>(groups: BTreeMap<K, SplitCell>, name: impl Fn(&K) -> String) -> Vec<AgenticRow> {
    groups.into_iter().map(|(k, cell)| AgenticRow { group: name(&k), cell }).collect()
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable tables: R-Precision by scope, routing accuracy by
    /// strategy and agentic success by filing and question.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(out, "# Evaluation report\n");
        let _ = writeln!(
            out,
            "Corpus seed {}, {} raw / {} reconciled records, registry {}. Provider `{}`, embedder `{}`. {} questions ({} templated, {} variegated).\n",
            self.config.seed,
            m.raw_records,
            m.reconciled_records,
            m.registry_version,
            m.provider,
            m.embedder,
            m.instances,
            m.templated,
            m.variegated
        );
        if let Some(r) = &self.retrieval {
            let _ = writeln!(out, "## Retrieval (R-Precision, %)\n");
            let _ = writeln!(out, "| Filing | Queries | Global | Agent | Table |");
            let _ = writeln!(out, "|---|---:|---:|---:|---:|");
            for row in r.rows.iter().chain(std::iter::once(&r.overall)) {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    row.filing,
                    row.queries,
                    pct(row.global),
                    pct(row.agent),
                    pct(row.table)
                );
            }
            out.push('\n');
        }
        if let Some(r) = &self.routing {
            let _ = writeln!(out, "## Routing accuracy (%)\n");
            let _ = writeln!(out, "| Strategy | Split | Samples | Agent | Table given agent | Overall | Unroutable |");
            let _ = writeln!(out, "|---|---|---:|---:|---:|---:|---:|");
            for row in &r.rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    row.strategy,
                    row.split,
                    row.samples,
                    pct(row.acc_agent),
                    pct(row.acc_table_given_agent),
                    pct(row.acc_overall),
                    row.unroutable
                );
            }
            out.push('\n');
        }
        if let Some(a) = &self.agentic {
            let _ = writeln!(out, "## Agentic success (%)\n");
            let _ = writeln!(out, "| Group | Templated | Variegated | Both |");
            let _ = writeln!(out, "|---|---:|---:|---:|");
            let overall = AgenticRow { group: "Overall".into(), cell: a.overall };
            for row in a.by_filing.iter().chain(&a.by_template).chain(&a.by_difficulty).chain(std::iter::once(&overall)) {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    row.group,
                    tally(&row.cell.templated),
                    tally(&row.cell.variegated),
                    tally(&row.cell.both)
                );
            }
            out.push('\n');
        }
        out
    }
}
