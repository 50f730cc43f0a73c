//! Plan execution over a reconciled view.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::plan::{
    join_columns, AggFunction, ArithOp, Filter, FilterOp, Plan, PlanError, StepKind,
};
use crate::corpus::{FilingRecord, ReconciledView, METADATA_COLUMNS};

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error(transparent)]
    Invalid(#[from] PlanError),
    #[error("step `{0}`: division by zero")]
    DivisionByZero(String),
    #[error("step `{0}`: mean of an empty input")]
    EmptyMean(String),
    #[error("step `{step}`: non-numeric value in `{field}`")]
    NonNumeric { step: String, field: String },
    #[error("step `{0}`: result is not finite")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Float,
    List,
    Dataframe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum AnswerValue {
    Scalar(f64),
    List(Vec<String>),
    Table { columns: Vec<String>, rows: Vec<Vec<Value>> },
}

impl AnswerValue {
    pub fn answer_type(&self) -> AnswerType {
        match self {
            AnswerValue::Scalar(_) => AnswerType::Float,
            AnswerValue::List(_) => AnswerType::List,
            AnswerValue::Table { .. } => AnswerType::Dataframe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub value: AnswerValue,
    /// Every record id read by a retrieve step.
    pub supporting_record_ids: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct Frame {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Frame {
    fn col(&self, name: &str) -> usize {
        // validation guarantees the column exists
        self.columns.iter().position(|c| c == name).expect("validated column")
    }
}

#[derive(Debug, Clone)]
enum Data {
    Table(Frame),
    List(Vec<String>),
    Scalar(f64),
}

/// Text used for equality, grouping and distinct values: strings as-is,
/// everything else as compact JSON.
pub fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => render_value(a) == render_value(b),
    }
}

fn compare(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
        _ => render_value(a).cmp(&render_value(b)),
    }
}

/// Whether one record satisfies a filter. Missing values never match.
pub fn filter_matches(filter: &Filter, record: &FilingRecord) -> bool {
    let Some(v) = record.column(&filter.field) else { return false };
    match filter.op {
        FilterOp::Eq => filter.value.as_ref().is_some_and(|f| values_equal(&v, f)),
        FilterOp::Contains => filter.value.as_ref().is_some_and(|f| {
            render_value(&v).to_lowercase().contains(&render_value(f).to_lowercase())
        }),
        FilterOp::Range => {
            let above = filter.min.as_ref().is_none_or(|m| compare(&v, m).is_ge());
            let below = filter.max.as_ref().is_none_or(|m| compare(&v, m).is_le());
            above && below
        }
    }
}

/// Records of one table passing every filter, in view order.
pub fn retrieve<'a>(view: &'a ReconciledView, table: &str, filters: &[Filter]) -> Vec<&'a FilingRecord> {
    view.table(table).filter(|r| filters.iter().all(|f| filter_matches(f, r))).collect()
}

fn number(step: &str, field: &str, v: &Value) -> Result<Option<f64>, ExecError> {
    match v {
        Value::Null => Ok(None),
        other => other
            .as_f64()
            .map(Some)
            .ok_or_else(|| ExecError::NonNumeric { step: step.into(), field: field.into() }),
    }
}

fn finite(step: &str, x: f64) -> Result<f64, ExecError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ExecError::NonFinite(step.into()))
    }
}

/// Validates and runs a plan. Retrieval reads only `view`; the answer is the
/// output of the single return step.
pub fn execute_plan(plan: &Plan, view: &ReconciledView) -> Result<Answer, ExecError> {
    let validated = plan.validate(view.registry())?;
    let positions: HashMap<&str, usize> =
        plan.steps.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut outputs: Vec<Option<Data>> = vec![None; plan.steps.len()];
    let mut support = BTreeSet::new();

    for &i in &validated.order {
        let step = &plan.steps[i];
        let sid = step.id.as_str();
        let get = |id: &str| outputs[positions[id]].as_ref().expect("inputs run first");
        let data = match &step.kind {
            StepKind::Retrieve { table, filters, .. } => {
                let schema = view.registry().table(table).expect("validated table");
                let mut columns: Vec<String> = METADATA_COLUMNS.iter().map(|(n, _)| n.to_string()).collect();
                columns.extend(schema.field_names().map(str::to_string));
                let records = retrieve(view, table, filters);
                let rows = records
                    .iter()
                    .map(|r| {
                        support.insert(r.record_id.clone());
                        columns.iter().map(|c| r.column(c).unwrap_or(Value::Null)).collect()
                    })
                    .collect();
                Data::Table(Frame { columns, rows })
            }
            StepKind::Aggregate { input, function, field, group_fields } => {
                let Data::Table(frame) = get(input) else { unreachable!("validated table input") };
                aggregate(sid, frame, *function, field.as_deref(), group_fields)?
            }
            StepKind::Arithmetic { left, right, op } => {
                let (Data::Scalar(a), Data::Scalar(b)) = (get(left), get(right)) else {
                    unreachable!("validated scalar operands")
                };
                let x = match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div => {
                        if *b == 0.0 {
                            return Err(ExecError::DivisionByZero(sid.into()));
                        }
                        a / b
                    }
                };
                Data::Scalar(finite(sid, x)?)
            }
            StepKind::Join { left, right, on } => {
                let (Data::Table(l), Data::Table(r)) = (get(left), get(right)) else {
                    unreachable!("validated table operands")
                };
                Data::Table(join(l, r, on.iter().map(|k| (l.col(&k.left), r.col(&k.right))).collect()))
            }
            StepKind::Return { input, columns } => match get(input) {
                Data::Table(frame) if !columns.is_empty() => {
                    let idx: Vec<usize> = columns.iter().map(|c| frame.col(c)).collect();
                    Data::Table(Frame {
                        columns: columns.clone(),
                        rows: frame.rows.iter().map(|row| idx.iter().map(|&j| row[j].clone()).collect()).collect(),
                    })
                }
                other => other.clone(),
            },
        };
        outputs[i] = Some(data);
    }

    let value = match outputs[validated.return_step].take().expect("return step ran") {
        Data::Scalar(x) => AnswerValue::Scalar(x),
        Data::List(items) => AnswerValue::List(items),
        Data::Table(f) => AnswerValue::Table { columns: f.columns, rows: f.rows },
    };
    Ok(Answer { value, supporting_record_ids: support })
}

fn aggregate(
    sid: &str,
    frame: &Frame,
    function: AggFunction,
    field: Option<&str>,
    group_fields: &[String],
) -> Result<Data, ExecError> {
    let values = |f: &str| -> Result<Vec<f64>, ExecError> {
        let j = frame.col(f);
        let mut out = Vec::with_capacity(frame.rows.len());
        for row in &frame.rows {
            if let Some(x) = number(sid, f, &row[j])? {
                out.push(x);
            }
        }
        Ok(out)
    };
    Ok(match function {
        AggFunction::Count => Data::Scalar(frame.rows.len() as f64),
        AggFunction::Sum => {
            let f = field.expect("validated field");
            Data::Scalar(finite(sid, values(f)?.iter().sum())?)
        }
        AggFunction::Mean => {
            let f = field.expect("validated field");
            let xs = values(f)?;
            if xs.is_empty() {
                return Err(ExecError::EmptyMean(sid.into()));
            }
            Data::Scalar(finite(sid, xs.iter().sum::<f64>() / xs.len() as f64)?)
        }
        AggFunction::Distinct => {
            let j = frame.col(field.expect("validated field"));
            let set: BTreeSet<String> =
                frame.rows.iter().filter(|r| !r[j].is_null()).map(|r| render_value(&r[j])).collect();
            Data::List(set.into_iter().collect())
        }
        AggFunction::GroupbySum => {
            let f = field.expect("validated field");
            let vj = frame.col(f);
            let gj: Vec<usize> = group_fields.iter().map(|g| frame.col(g)).collect();
            // group key text -> (group values, running sum)
            let mut groups: BTreeMap<Vec<String>, (Vec<Value>, f64)> = BTreeMap::new();
            for row in &frame.rows {
                let key: Vec<String> = gj.iter().map(|&j| render_value(&row[j])).collect();
                let x = number(sid, f, &row[vj])?.unwrap_or(0.0);
                let entry = groups
                    .entry(key)
                    .or_insert_with(|| (gj.iter().map(|&j| row[j].clone()).collect(), 0.0));
                entry.1 += x;
            }
            let mut columns = group_fields.to_vec();
            columns.push(f.to_string());
            let mut rows = Vec::with_capacity(groups.len());
            for (_, (mut vals, sum)) in groups {
                vals.push(Value::from(finite(sid, sum)?));
                rows.push(vals);
            }
            Data::Table(Frame { columns, rows })
        }
    })
}

/// Inner equi-join; output rows follow left order, then right order.
fn join(l: &Frame, r: &Frame, keys: Vec<(usize, usize)>) -> Frame {
    let mut by_key: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (i, row) in r.rows.iter().enumerate() {
        if keys.iter().any(|&(_, rj)| row[rj].is_null()) {
            continue;
        }
        by_key.entry(keys.iter().map(|&(_, rj)| render_value(&row[rj])).collect()).or_default().push(i);
    }
    let mut rows = Vec::new();
    for lrow in &l.rows {
        if keys.iter().any(|&(lj, _)| lrow[lj].is_null()) {
            continue;
        }
        let key: Vec<String> = keys.iter().map(|&(lj, _)| render_value(&lrow[lj])).collect();
        for &i in by_key.get(&key).map(Vec::as_slice).unwrap_or(&[]) {
            let mut row = lrow.clone();
            row.extend(r.rows[i].iter().cloned());
            rows.push(row);
        }
    }
    Frame { columns: join_columns(&l.columns, &r.columns), rows }
}
