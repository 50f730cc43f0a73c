//! Plan DSL: a typed DAG of retrieve, aggregate, arithmetic, join and return
//! steps, serialized as JSON for gateway round trips.
//!
//! ```json
//! {"steps": [
//!   {"id": "s1", "op": "retrieve", "agent": "ADV", "table": "adv_entity",
//!    "filters": [{"field": "crd_number", "op": "eq", "value": "ADV-0001"}]},
//!   {"id": "s2", "op": "aggregate", "input": "s1", "function": "sum", "field": "regulatory_aum"},
//!   {"id": "s3", "op": "return", "input": "s2"}
//! ]}
//! ```
//!
//! Filters compare a schema field or one of the metadata columns
//! (`record_id`, `accession_id`, `filer_id`, `period`). `eq` and `contains`
//! take `value`; `range` takes an inclusive `min` and/or `max`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{FieldKind, FilingType, SchemaRegistry, METADATA_COLUMNS};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("plan text is not valid JSON: {0}")]
    Parse(String),
    #[error("plan has no steps")]
    Empty,
    #[error("duplicate step id `{0}`")]
    DuplicateStep(String),
    #[error("plan must have exactly one return step, found {0}")]
    ReturnCount(usize),
    #[error("step `{step}` references unknown step `{reference}`")]
    UnknownReference { step: String, reference: String },
    #[error("step graph has a cycle through `{0}`")]
    Cycle(String),
    #[error("step `{step}`: unknown table `{table}`")]
    UnknownTable { step: String, table: String },
    #[error("step `{step}`: table `{table}` does not belong to agent {agent}")]
    AgentMismatch { step: String, table: String, agent: FilingType },
    #[error("step `{step}`: unknown field `{field}`")]
    UnknownField { step: String, field: String },
    #[error("step `{step}`: {reason}")]
    Type { step: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Draft,
    Optimized,
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOp {
    Eq,
    /// Case-insensitive substring match on the rendered value.
    Contains,
    /// Inclusive bounds; numbers compare numerically, everything else as text
    /// (ISO dates order correctly as text).
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub field: String,
    pub op: FilterOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Value>,
}

impl Filter {
    pub fn eq(field: &str, value: impl Into<Value>) -> Filter {
        Filter { field: field.into(), op: FilterOp::Eq, value: Some(value.into()), min: None, max: None }
    }

    pub fn contains(field: &str, value: &str) -> Filter {
        Filter {
            field: field.into(),
            op: FilterOp::Contains,
            value: Some(Value::String(value.into())),
            min: None,
            max: None,
        }
    }

    pub fn range(field: &str, min: Option<Value>, max: Option<Value>) -> Filter {
        Filter { field: field.into(), op: FilterOp::Range, value: None, min, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggFunction {
    Sum,
    Mean,
    Count,
    GroupbySum,
    /// Sorted distinct values of one column, as a list.
    Distinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinKey {
    pub left: String,
    pub right: String,
}

mod agent_name {
    use super::*;

    pub fn serialize<S: Serializer>(ft: &FilingType, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(ft.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FilingType, D::Error> {
        let s = String::deserialize(d)?;
        FilingType::parse_loose(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown agent `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StepKind {
    Retrieve {
        #[serde(with = "agent_name")]
        agent: FilingType,
        table: String,
        #[serde(default)]
        filters: Vec<Filter>,
    },
    Aggregate {
        input: String,
        function: AggFunction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        group_fields: Vec<String>,
    },
    Arithmetic {
        left: String,
        right: String,
        /// Serialized as `operator`; `op` is the step tag.
        #[serde(rename = "operator")]
        op: ArithOp,
    },
    Join {
        left: String,
        right: String,
        on: Vec<JoinKey>,
    },
    Return {
        input: String,
        /// Optional projection when the input is a table.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        columns: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub id: String,
    #[serde(flatten)]
    pub kind: StepKind,
}

impl PlanStep {
    pub fn new(id: &str, kind: StepKind) -> PlanStep {
        PlanStep { id: id.into(), kind }
    }

    /// Ids of the steps this step consumes.
    pub fn inputs(&self) -> Vec<&str> {
        match &self.kind {
            StepKind::Retrieve { .. } => vec![],
            StepKind::Aggregate { input, .. } | StepKind::Return { input, .. } => vec![input],
            StepKind::Arithmetic { left, right, .. } | StepKind::Join { left, right, .. } => {
                vec![left, right]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default)]
    pub source_subquery: usize,
}

/// Static output type of a step.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputType {
    Table(Vec<(String, FieldKind)>),
    List,
    Scalar,
}

impl OutputType {
    fn name(&self) -> &'static str {
        match self {
            OutputType::Table(_) => "table",
            OutputType::List => "list",
            OutputType::Scalar => "scalar",
        }
    }
}

impl fmt::Display for OutputType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of validation: steps in execution order with their output types.
#[derive(Debug, Clone)]
pub struct ValidatedPlan {
    pub order: Vec<usize>,
    pub types: Vec<OutputType>,
    pub return_step: usize,
}

/// Column names of a join result: right-hand names that collide with a
/// left-hand name get an `_r` suffix (repeated until unique).
pub fn join_columns(left: &[String], right: &[String]) -> Vec<String> {
    let mut out: Vec<String> = left.to_vec();
    for c in right {
        let mut name = c.clone();
        while out.contains(&name) {
            name.push_str("_r");
        }
        out.push(name);
    }
    out
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>) -> Plan {
        Plan { steps, provenance: Provenance::Draft, source_subquery: 0 }
    }

    /// Parses the first JSON object found in `text`, tolerating prose or code
    /// fences around it.
    pub fn from_text(text: &str) -> Result<Plan, PlanError> {
        let start = text.find('{').ok_or_else(|| PlanError::Parse("no JSON object".into()))?;
        let end = text.rfind('}').ok_or_else(|| PlanError::Parse("no JSON object".into()))?;
        if end < start {
            return Err(PlanError::Parse("no JSON object".into()));
        }
        serde_json::from_str(&text[start..=end]).map_err(|e| PlanError::Parse(e.to_string()))
    }

    /// JSON carrying only the steps, as shown to and produced by providers.
    pub fn steps_json(&self) -> String {
        serde_json::json!({ "steps": self.steps }).to_string()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Plan {
        self.provenance = provenance;
        self
    }

    /// Retrieve steps as (step id, agent, table).
    pub fn retrievals(&self) -> impl Iterator<Item = (&str, FilingType, &str, &[Filter])> {
        self.steps.iter().filter_map(|s| match &s.kind {
            StepKind::Retrieve { agent, table, filters } => {
                Some((s.id.as_str(), *agent, table.as_str(), filters.as_slice()))
            }
            _ => None,
        })
    }

    pub fn validate(&self, registry: &SchemaRegistry) -> Result<ValidatedPlan, PlanError> {
        if self.steps.is_empty() {
            return Err(PlanError::Empty);
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, s) in self.steps.iter().enumerate() {
            if index.insert(s.id.as_str(), i).is_some() {
                return Err(PlanError::DuplicateStep(s.id.clone()));
            }
        }
        let returns: Vec<usize> = self
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.kind, StepKind::Return { .. }))
            .map(|(i, _)| i)
            .collect();
        if returns.len() != 1 {
            return Err(PlanError::ReturnCount(returns.len()));
        }
        for s in &self.steps {
            for r in s.inputs() {
                if !index.contains_key(r) {
                    return Err(PlanError::UnknownReference { step: s.id.clone(), reference: r.into() });
                }
            }
        }
        let order = topological_order(&self.steps, &index)?;
        let mut types: Vec<Option<OutputType>> = vec![None; self.steps.len()];
        for &i in &order {
            let step = &self.steps[i];
            let ty = |id: &str| types[index[id]].clone().expect("inputs typed before consumers");
            types[i] = Some(step_type(step, registry, ty)?);
        }
        Ok(ValidatedPlan {
            order,
            types: types.into_iter().map(Option::unwrap).collect(),
            return_step: returns[0],
        })
    }
}

fn topological_order(steps: &[PlanStep], index: &HashMap<&str, usize>) -> Result<Vec<usize>, PlanError> {
    let n = steps.len();
    let mut indegree = vec![0usize; n];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in steps.iter().enumerate() {
        for r in s.inputs() {
            indegree[i] += 1;
            consumers[index[r]].push(i);
        }
    }
    // Kahn's algorithm, always taking the lowest ready position for a stable order
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        order.push(i);
        for &c in &consumers[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap();
        return Err(PlanError::Cycle(steps[stuck].id.clone()));
    }
    Ok(order)
}

fn type_err(step: &PlanStep, reason: impl Into<String>) -> PlanError {
    PlanError::Type { step: step.id.clone(), reason: reason.into() }
}

fn table_columns<'a>(step: &PlanStep, t: &'a OutputType, role: &str) -> Result<&'a [(String, FieldKind)], PlanError> {
    match t {
        OutputType::Table(cols) => Ok(cols),
        other => Err(type_err(step, format!("{role} must be a table, found {other}"))),
    }
}

fn column_kind(step: &PlanStep, cols: &[(String, FieldKind)], field: &str) -> Result<FieldKind, PlanError> {
    cols.iter()
        .find(|(n, _)| n == field)
        .map(|(_, k)| *k)
        .ok_or_else(|| PlanError::UnknownField { step: step.id.clone(), field: field.into() })
}

fn step_type(
    step: &PlanStep,
    registry: &SchemaRegistry,
    ty: impl Fn(&str) -> OutputType,
) -> Result<OutputType, PlanError> {
    match &step.kind {
        StepKind::Retrieve { agent, table, filters } => {
            let schema = registry.table(table).ok_or_else(|| PlanError::UnknownTable {
                step: step.id.clone(),
                table: table.clone(),
            })?;
            if schema.filing_type != *agent {
                return Err(PlanError::AgentMismatch {
                    step: step.id.clone(),
                    table: table.clone(),
                    agent: *agent,
                });
            }
            let mut cols: Vec<(String, FieldKind)> =
                METADATA_COLUMNS.iter().map(|(n, k)| (n.to_string(), *k)).collect();
            cols.extend(schema.fields.iter().map(|f| (f.name.clone(), f.kind)));
            for f in filters {
                column_kind(step, &cols, &f.field)?;
                match f.op {
                    FilterOp::Eq | FilterOp::Contains if f.value.is_none() => {
                        return Err(type_err(step, format!("filter on `{}` needs a value", f.field)))
                    }
                    FilterOp::Contains if !f.value.as_ref().is_some_and(Value::is_string) => {
                        return Err(type_err(step, format!("contains filter on `{}` needs a text value", f.field)))
                    }
                    FilterOp::Range if f.min.is_none() && f.max.is_none() => {
                        return Err(type_err(step, format!("range filter on `{}` needs a bound", f.field)))
                    }
                    _ => {}
                }
            }
            Ok(OutputType::Table(cols))
        }
        StepKind::Aggregate { input, function, field, group_fields } => {
            let input_ty = ty(input);
            let cols = table_columns(step, &input_ty, "aggregate input")?;
            let numeric_field = || -> Result<(String, FieldKind), PlanError> {
                let f = field.as_deref().ok_or_else(|| type_err(step, "aggregate needs a field"))?;
                let kind = column_kind(step, cols, f)?;
                if kind != FieldKind::Number {
                    return Err(type_err(step, format!("field `{f}` is not numeric")));
                }
                Ok((f.to_string(), kind))
            };
            match function {
                AggFunction::Sum | AggFunction::Mean => {
                    numeric_field()?;
                    Ok(OutputType::Scalar)
                }
                AggFunction::Count => Ok(OutputType::Scalar),
                AggFunction::Distinct => {
                    let f = field.as_deref().ok_or_else(|| type_err(step, "distinct needs a field"))?;
                    column_kind(step, cols, f)?;
                    Ok(OutputType::List)
                }
                AggFunction::GroupbySum => {
                    let value = numeric_field()?;
                    if group_fields.is_empty() {
                        return Err(type_err(step, "groupby_sum needs group_fields"));
                    }
                    let mut out = Vec::new();
                    for g in group_fields {
                        out.push((g.clone(), column_kind(step, cols, g)?));
                    }
                    if group_fields.contains(&value.0) {
                        return Err(type_err(step, "value field cannot also be a group field"));
                    }
                    out.push(value);
                    Ok(OutputType::Table(out))
                }
            }
        }
        StepKind::Arithmetic { left, right, .. } => {
            for (role, id) in [("left", left), ("right", right)] {
                let t = ty(id);
                if t != OutputType::Scalar {
                    return Err(type_err(step, format!("{role} operand must be a scalar, found {t}")));
                }
            }
            Ok(OutputType::Scalar)
        }
        StepKind::Join { left, right, on } => {
            let (lt, rt) = (ty(left), ty(right));
            let lcols = table_columns(step, &lt, "join left")?;
            let rcols = table_columns(step, &rt, "join right")?;
            if on.is_empty() {
                return Err(type_err(step, "join needs at least one key"));
            }
            for k in on {
                column_kind(step, lcols, &k.left)?;
                column_kind(step, rcols, &k.right)?;
            }
            let lnames: Vec<String> = lcols.iter().map(|(n, _)| n.clone()).collect();
            let rnames: Vec<String> = rcols.iter().map(|(n, _)| n.clone()).collect();
            let kinds: BTreeMap<usize, FieldKind> =
                lcols.iter().chain(rcols).map(|(_, k)| *k).enumerate().collect();
            Ok(OutputType::Table(
                join_columns(&lnames, &rnames).into_iter().enumerate().map(|(i, n)| (n, kinds[&i])).collect(),
            ))
        }
        StepKind::Return { input, columns } => {
            let t = ty(input);
            if columns.is_empty() {
                return Ok(t);
            }
            let cols = table_columns(step, &t, "projected return input")?;
            let mut out = Vec::new();
            for c in columns {
                out.push((c.clone(), column_kind(step, cols, c)?));
            }
            Ok(OutputType::Table(out))
        }
    }
}
