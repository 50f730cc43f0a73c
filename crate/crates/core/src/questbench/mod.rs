//! Question templates, answerable instantiation, oracle answers and
//! paraphrased variants.
//!
//! Seven easy and four hard templates. Slot values are drawn only from
//! bindings whose oracle answer rests on at least one record, so every
//! instance is answerable from the corpus.

mod canonical;
mod oracle;

pub use canonical::canonical_plan;
pub use oracle::{oracle_solve, OracleOutput};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AnswerType, AnswerValue};
use crate::corpus::{FilingType, ReconciledView};
use crate::gateway::{prompt, ChatProvider, ChatRequest};
use crate::routing::Route;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template {0} is unsatisfiable on this corpus")]
    Unsatisfiable(String),
    #[error("missing slot `{0}`")]
    MissingSlot(String),
    #[error("malformed slot `{0}`")]
    BadSlot(String),
    #[error("benchmark file: {0}")]
    Io(#[from] std::io::Error),
    #[error("benchmark line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

/// Slot name to filler.
pub type Slots = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Hard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Templated,
    Variegated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Manager,
    Adviser,
    Fund,
    Period,
    Category,
    /// Basket expiration cutoff.
    Date,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Slot::Manager => "manager",
            Slot::Adviser => "adviser",
            Slot::Fund => "fund",
            Slot::Period => "period",
            Slot::Category => "category",
            Slot::Date => "date",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionTemplate {
    pub id: &'static str,
    pub difficulty: Difficulty,
    /// Text with `{slot}` placeholders.
    pub text: &'static str,
    pub slots: &'static [Slot],
    pub answer_type: AnswerType,
    /// Gold routes in fetch order.
    pub routes: &'static [(FilingType, &'static str)],
}

impl QuestionTemplate {
    pub fn fill(&self, slots: &Slots) -> String {
        let mut text = self.text.to_string();
        for (k, v) in slots {
            text = text.replace(&format!("{{{k}}}"), v);
        }
        text
    }

    pub fn gold_routes(&self) -> Vec<Route> {
        self.routes.iter().map(|(a, t)| Route::new(*a, *t)).collect()
    }

    pub fn filing_types(&self) -> BTreeSet<FilingType> {
        self.routes.iter().map(|(a, _)| *a).collect()
    }
}

use FilingType::{Adv, Ncen, Ncsr, Nmfp, Nport, ThirteenF};
use Slot::{Adviser, Category, Date, Fund, Manager, Period};

pub const TEMPLATES: [QuestionTemplate; 11] = [
    QuestionTemplate {
        id: "E0",
        difficulty: Difficulty::Easy,
        text: "Get the total value of cash equity positions reported by manager {manager} for period {period}",
        slots: &[Manager, Period],
        answer_type: AnswerType::Float,
        routes: &[(ThirteenF, "thirteenf_holdings")],
    },
    QuestionTemplate {
        id: "E1",
        difficulty: Difficulty::Easy,
        text: "Get the aggregate value of option positions reported by manager {manager} for period {period}",
        slots: &[Manager, Period],
        answer_type: AnswerType::Float,
        routes: &[(ThirteenF, "thirteenf_holdings")],
    },
    QuestionTemplate {
        id: "E2",
        difficulty: Difficulty::Easy,
        text: "Get the regulatory AUM for adviser {adviser} for period {period}",
        slots: &[Adviser, Period],
        answer_type: AnswerType::Float,
        routes: &[(Adv, "adv_entity")],
    },
    QuestionTemplate {
        id: "E3",
        difficulty: Difficulty::Easy,
        text: "Get all funds managed by investment adviser {adviser} for period {period}",
        slots: &[Adviser, Period],
        answer_type: AnswerType::List,
        routes: &[(Ncen, "ncen_funds")],
    },
    QuestionTemplate {
        id: "E4",
        difficulty: Difficulty::Easy,
        text: "Get all prime brokers used by adviser {adviser} for period {period}",
        slots: &[Adviser, Period],
        answer_type: AnswerType::List,
        routes: &[(Adv, "adv_private_funds")],
    },
    QuestionTemplate {
        id: "E5",
        difficulty: Difficulty::Easy,
        text: "Get the country level AUM of funds managed by adviser {adviser} for period {period}",
        slots: &[Adviser, Period],
        answer_type: AnswerType::Dataframe,
        routes: &[(Ncen, "ncen_funds"), (Nport, "nport_holdings")],
    },
    QuestionTemplate {
        id: "E6",
        difficulty: Difficulty::Easy,
        text: "Get the net assets of each money market fund managed by adviser {adviser} for period {period}",
        slots: &[Adviser, Period],
        answer_type: AnswerType::Dataframe,
        routes: &[(Ncen, "ncen_funds"), (Nmfp, "nmfp_fund_summary")],
    },
    QuestionTemplate {
        id: "H0",
        difficulty: Difficulty::Hard,
        text: "Get all holdings with asset category {category} for fund {fund} for period {period}",
        slots: &[Fund, Category, Period],
        answer_type: AnswerType::Dataframe,
        routes: &[(Nport, "nport_holdings")],
    },
    QuestionTemplate {
        id: "H1",
        difficulty: Difficulty::Hard,
        text: "Get the derivative notional per counterparty for funds managed by adviser {adviser} for period {period}",
        slots: &[Adviser, Period],
        answer_type: AnswerType::Dataframe,
        routes: &[(Ncen, "ncen_funds"), (Nport, "nport_derivatives")],
    },
    QuestionTemplate {
        id: "H2",
        difficulty: Difficulty::Hard,
        text: "Get all custom basket swaps expiring on or before {date} held by fund {fund} for period {period}",
        slots: &[Fund, Period, Date],
        answer_type: AnswerType::Dataframe,
        routes: &[(Nport, "nport_baskets")],
    },
    QuestionTemplate {
        id: "H3",
        difficulty: Difficulty::Hard,
        text: "Get the total assets reported for fund {fund} for period {period}",
        slots: &[Fund, Period],
        answer_type: AnswerType::Float,
        routes: &[(Ncsr, "ncsr_statement_items")],
    },
];

pub fn template(id: &str) -> Option<&'static QuestionTemplate> {
    TEMPLATES.iter().find(|t| t.id == id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionInstance {
    pub instance_id: String,
    pub template_id: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
    pub text: String,
    pub slots: Slots,
    pub gold_routes: Vec<Route>,
    pub answer_type: AnswerType,
    pub gold_answer: AnswerValue,
    pub relevant_record_ids: BTreeSet<String>,
}

impl QuestionInstance {
    pub fn template(&self) -> &'static QuestionTemplate {
        template(&self.template_id).expect("instances carry known template ids")
    }

    pub fn filing_types(&self) -> BTreeSet<FilingType> {
        self.gold_routes.iter().map(|r| r.agent).collect()
    }
}

fn distinct(view: &ReconciledView, table: &str, field: &str) -> Vec<String> {
    let set: BTreeSet<String> = view.table(table).filter_map(|r| r.text(field)).map(str::to_string).collect();
    set.into_iter().collect()
}

/// Candidate bindings before the answerability check.
fn candidate_bindings(t: &QuestionTemplate, view: &ReconciledView) -> Vec<Slots> {
    let periods: Vec<String> = view
        .records()
        .iter()
        .map(|r| r.period.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if t.id == "H2" {
        // one binding per (fund, period, expiration) present in the basket table
        let set: BTreeSet<(String, String, String)> = view
            .table("nport_baskets")
            .filter_map(|r| {
                Some((r.text("series_id")?.to_string(), r.period.to_string(), r.text("expiration_date")?.to_string()))
            })
            .collect();
        return set
            .into_iter()
            .map(|(f, p, d)| Slots::from([("fund".into(), f), ("period".into(), p), ("date".into(), d)]))
            .collect();
    }
    let domain = |slot: Slot| -> Vec<String> {
        match slot {
            Slot::Period => periods.clone(),
            Slot::Manager => distinct(view, "thirteenf_holdings", "manager_cik"),
            Slot::Adviser => {
                let mut set: BTreeSet<String> = distinct(view, "adv_entity", "crd_number").into_iter().collect();
                set.extend(distinct(view, "ncen_funds", "investment_adviser"));
                set.into_iter().collect()
            }
            Slot::Fund if t.id == "H3" => distinct(view, "ncsr_statement_items", "fund_id"),
            Slot::Fund => distinct(view, "nport_holdings", "series_id"),
            Slot::Category => distinct(view, "nport_holdings", "asset_category"),
            Slot::Date => Vec::new(),
        }
    };
    let mut out = vec![Slots::new()];
    for &slot in t.slots {
        let values = domain(slot);
        out = out
            .into_iter()
            .flat_map(|b| {
                values.iter().map(move |v| {
                    let mut b = b.clone();
                    b.insert(slot.name().to_string(), v.clone());
                    b
                })
            })
            .collect();
    }
    out
}

/// Answerable bindings of one template, with their oracle outputs.
pub struct Sampler {
    template: &'static QuestionTemplate,
    bindings: Vec<(Slots, OracleOutput)>,
}

impl Sampler {
    pub fn new(template: &'static QuestionTemplate, view: &ReconciledView) -> Result<Sampler, BenchError> {
        let mut bindings = Vec::new();
        for slots in candidate_bindings(template, view) {
            let out = oracle_solve(template.id, &slots, view)?;
            if !out.relevant_record_ids.is_empty() {
                bindings.push((slots, out));
            }
        }
        if bindings.is_empty() {
            return Err(BenchError::Unsatisfiable(template.id.into()));
        }
        Ok(Sampler { template, bindings })
    }

    /// Number of distinct answerable bindings.
    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Draws one answerable binding uniformly.
    pub fn instantiate(&self, rng: &mut impl Rng, instance_id: String) -> QuestionInstance {
        let (slots, out) = self.bindings.choose(rng).expect("sampler is non-empty");
        let t = self.template;
        QuestionInstance {
            instance_id,
            template_id: t.id.into(),
            difficulty: t.difficulty,
            variant: Variant::Templated,
            text: t.fill(slots),
            slots: slots.clone(),
            gold_routes: t.gold_routes(),
            answer_type: t.answer_type,
            gold_answer: out.answer.clone(),
            relevant_record_ids: out.relevant_record_ids.clone(),
        }
    }
}

/// One instance of `template` drawn with `rng`.
pub fn instantiate(
    template: &'static QuestionTemplate,
    view: &ReconciledView,
    rng: &mut impl Rng,
) -> Result<QuestionInstance, BenchError> {
    let sampler = Sampler::new(template, view)?;
    Ok(sampler.instantiate(rng, format!("{}-0000", template.id)))
}

/// Up to `n` paraphrases of `instance` (tag `variegate`); gold data is
/// copied. Provider failures drop the affected variant.
pub fn variegate(instance: &QuestionInstance, provider: &dyn ChatProvider, n: usize, seed: u64) -> Vec<QuestionInstance> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = prompt::Sections::new()
            .with("question", instance.text.as_str())
            .with("variant", i.to_string())
            .with("seed", seed.to_string());
        let request = ChatRequest::new("variegate", prompt::system("variegate"), s.render());
        match provider.complete(&request) {
            Ok(r) if !r.content.trim().is_empty() => {
                let mut v = instance.clone();
                v.instance_id = format!("{}-v{i}", instance.instance_id);
                v.variant = Variant::Variegated;
                v.text = r.content.trim().to_string();
                out.push(v);
            }
            Ok(_) => log::warn!("empty variant {i} for {}", instance.instance_id),
            Err(e) => log::warn!("variant {i} for {} failed: {e}", instance.instance_id),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub per_template: usize,
    pub seed: u64,
    /// Paraphrases per templated instance.
    pub variations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { per_template: 30, seed: 0, variations: 2 }
    }
}

/// Templated instances for every template, each template drawing from its
/// own seeded stream.
pub fn generate_templated(view: &ReconciledView, config: &BenchConfig) -> Result<Vec<QuestionInstance>, BenchError> {
    let mut out = Vec::new();
    for (ti, t) in TEMPLATES.iter().enumerate() {
        let sampler = Sampler::new(t, view)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((ti as u64 + 1) << 32));
        for i in 0..config.per_template {
            out.push(sampler.instantiate(&mut rng, format!("{}-{i:04}", t.id)));
        }
    }
    Ok(out)
}

/// Templated instances followed by their variants.
pub fn generate_benchmark(
    view: &ReconciledView,
    config: &BenchConfig,
    provider: &dyn ChatProvider,
) -> Result<Vec<QuestionInstance>, BenchError> {
    let base = generate_templated(view, config)?;
    let mut out = base.clone();
    for inst in &base {
        out.extend(variegate(inst, provider, config.variations, config.seed));
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(instances: &[QuestionInstance], mut out: W) -> std::io::Result<()> {
    for i in instances {
        writeln!(out, "{}", serde_json::to_string(i).expect("instance serializes"))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<QuestionInstance>, BenchError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| BenchError::Json { line: n + 1, source })?);
    }
    Ok(out)
}

/// Relevant-record counts per template: median over instances and total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatapointStats {
    pub template_id: String,
    pub instances: usize,
    pub median: f64,
    pub total: usize,
}

pub fn datapoint_stats(instances: &[QuestionInstance]) -> Vec<DatapointStats> {
    let mut by_template: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in instances.iter().filter(|i| i.variant == Variant::Templated) {
        by_template.entry(i.template_id.as_str()).or_default().push(i.relevant_record_ids.len());
    }
    by_template
        .into_iter()
        .map(|(id, mut counts)| {
            counts.sort_unstable();
            let n = counts.len();
            let median = if n % 2 == 1 {
                counts[n / 2] as f64
            } else {
                (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
            };
            DatapointStats { template_id: id.into(), instances: n, median, total: counts.iter().sum() }
        })
        .collect()
}
