use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{render_value, AnswerValue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    /// Used when both values are near zero.
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-6, abs: 1e-9 }
    }
}

impl Tolerances {
    pub fn close(&self, a: f64, b: f64) -> bool {
        if a == b {
            return true;
        }
        if !a.is_finite() || !b.is_finite() {
            return false;
        }
        let diff = (a - b).abs();
        diff <= self.abs || diff <= self.rel * a.abs().max(b.abs())
    }
}

/// Column-sorted, row-sorted copy of a table.
fn canonical_table(columns: &[String], rows: &[Vec<Value>]) -> (Vec<String>, Vec<Vec<Value>>) {
    let mut order: Vec<usize> = (0..columns.len()).collect();
    order.sort_by(|&a, &b| columns[a].cmp(&columns[b]));
    let cols = order.iter().map(|&i| columns[i].clone()).collect();
    let mut out: Vec<Vec<Value>> = rows
        .iter()
        .map(|r| order.iter().map(|&i| r.get(i).cloned().unwrap_or(Value::Null)).collect())
        .collect();
    out.sort_by(|a, b| row_order(a, b));
    (cols, out)
}

// Text cells first, then numbers by value, so that tiny float differences do
// not reorder rows whose keys agree.
fn row_order(a: &[Value], b: &[Value]) -> Ordering {
    let text = |r: &[Value]| -> Vec<String> {
        r.iter().map(|v| if v.is_number() { String::new() } else { render_value(v) }).collect()
    };
    let nums = |r: &[Value]| -> Vec<f64> { r.iter().map(|v| v.as_f64().unwrap_or(0.0)).collect() };
    text(a).cmp(&text(b)).then_with(|| {
        nums(a).iter().zip(nums(b).iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

fn cells_match(a: &Value, b: &Value, tol: &Tolerances) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => tol.close(x, y),
        _ => render_value(a) == render_value(b),
    }
}

/// Whether a produced answer matches the gold answer. Scalars compare under
/// the tolerances, lists as sets and tables after canonicalization; answers
/// of different types never match.
pub fn judge_success(produced: &AnswerValue, gold: &AnswerValue, tol: &Tolerances) -> bool {
    match (produced, gold) {
        (AnswerValue::Scalar(a), AnswerValue::Scalar(b)) => tol.close(*a, *b),
        (AnswerValue::List(a), AnswerValue::List(b)) => {
            a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>()
        }
        (AnswerValue::Table { columns: ca, rows: ra }, AnswerValue::Table { columns: cb, rows: rb }) => {
            let (ca, ra) = canonical_table(ca, ra);
            let (cb, rb) = canonical_table(cb, rb);
            ca == cb
                && ra.len() == rb.len()
                && ra.iter().zip(&rb).all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| cells_match(p, q, tol)))
        }
        _ => false,
    }
}
