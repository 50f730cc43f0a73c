use serde::{Deserialize, Serialize};

use super::{Route, RoutingError, RoutingOutcome};
use crate::corpus::FilingType;

/// How a multi-route question earns credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditMode {
    /// Fraction of gold routes matched by position.
    #[default]
    Fractional,
    /// Full credit when at least one gold route is matched by position.
    AtLeastOne,
}

/// Gold agent (rows, registry order) against predicted agent (columns, plus
/// a final `unroutable` column), counted per gold route position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        ConfusionMatrix {
            labels: FilingType::ALL.iter().map(|f| f.name().to_string()).collect(),
            counts: vec![vec![0; FilingType::ALL.len() + 1]; FilingType::ALL.len()],
        }
    }
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingScore {
    pub samples: usize,
    /// Summed agent credit over samples.
    pub agent_correct: f64,
    /// Summed joint (agent and table) credit over samples.
    pub joint_correct: f64,
    pub unroutable: usize,
    pub acc_agent: f64,
    pub acc_table_given_agent: f64,
    pub acc_overall: f64,
    pub confusion: ConfusionMatrix,
}

/// Scores routing outcomes against gold route sequences.
///
/// Per sample, the i-th predicted route is compared with the i-th gold route.
/// Agent credit counts agent matches, joint credit counts positions where
/// both agent and table match. `acc_agent` is mean agent credit,
/// `acc_table_given_agent` is summed joint credit over summed agent credit and
/// `acc_overall` is mean joint credit, so the overall accuracy is exactly the
/// product of the other two.
pub fn score_routing(
    samples: &[(RoutingOutcome, Vec<Route>)],
    mode: CreditMode,
) -> Result<RoutingScore, RoutingError> {
    let mut confusion = ConfusionMatrix::default();
    let mut agent_sum = 0.0;
    let mut joint_sum = 0.0;
    let mut unroutable = 0;
    for (i, (outcome, gold)) in samples.iter().enumerate() {
        if gold.is_empty() {
            return Err(RoutingError::EmptyGold(i));
        }
        if outcome.unroutable {
            unroutable += 1;
        }
        let mut agents = 0usize;
        let mut joint = 0usize;
        for (pos, g) in gold.iter().enumerate() {
            let predicted = if outcome.unroutable { None } else { outcome.predicted.get(pos) };
            let col = predicted.map_or(FilingType::ALL.len(), |p| p.agent.ordinal());
            confusion.counts[g.agent.ordinal()][col] += 1;
            if let Some(p) = predicted {
                if p.agent == g.agent {
                    agents += 1;
                    if p.table == g.table {
                        joint += 1;
                    }
                }
            }
        }
        let (a, j) = match mode {
            CreditMode::Fractional => {
                (agents as f64 / gold.len() as f64, joint as f64 / gold.len() as f64)
            }
            CreditMode::AtLeastOne => ((agents > 0) as u8 as f64, (joint > 0) as u8 as f64),
        };
        agent_sum += a;
        joint_sum += j;
    }
    let n = samples.len();
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    Ok(RoutingScore {
        samples: n,
        agent_correct: agent_sum,
        joint_correct: joint_sum,
        unroutable,
        acc_agent: ratio(agent_sum, n as f64),
        acc_table_given_agent: ratio(joint_sum, agent_sum),
        acc_overall: ratio(joint_sum, n as f64),
        confusion,
    })
}
