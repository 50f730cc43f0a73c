//! Canonical plan per template, used to check the executor against the
//! oracle and as the reply of the perfect planner.

use serde_json::Value;

use super::{BenchError, Slots};
use crate::agents::{AggFunction, Filter, JoinKey, Plan, PlanStep, StepKind};
use crate::corpus::FilingType;

fn slot(slots: &Slots, name: &str) -> Result<String, BenchError> {
    slots.get(name).cloned().ok_or_else(|| BenchError::MissingSlot(name.into()))
}

fn retrieve(id: &str, agent: FilingType, table: &str, filters: Vec<Filter>) -> PlanStep {
    PlanStep::new(id, StepKind::Retrieve { agent, table: table.into(), filters })
}

fn aggregate(id: &str, input: &str, function: AggFunction, field: &str, groups: &[&str]) -> PlanStep {
    PlanStep::new(
        id,
        StepKind::Aggregate {
            input: input.into(),
            function,
            field: Some(field.into()),
            group_fields: groups.iter().map(|g| g.to_string()).collect(),
        },
    )
}

fn ret(id: &str, input: &str, columns: &[&str]) -> PlanStep {
    PlanStep::new(
        id,
        StepKind::Return { input: input.into(), columns: columns.iter().map(|c| c.to_string()).collect() },
    )
}

fn fund_join(id: &str, left: &str, right: &str) -> PlanStep {
    PlanStep::new(
        id,
        StepKind::Join {
            left: left.into(),
            right: right.into(),
            on: vec![
                JoinKey { left: "fund_id".into(), right: "series_id".into() },
                JoinKey { left: "period".into(), right: "period".into() },
            ],
        },
    )
}

/// The plan whose execution reproduces the oracle answer for a binding.
pub fn canonical_plan(template_id: &str, slots: &Slots) -> Result<Plan, BenchError> {
    let period = Filter::eq("period", slot(slots, "period")?);
    let census = |adviser: String| {
        retrieve(
            "s1",
            FilingType::Ncen,
            "ncen_funds",
            vec![Filter::eq("investment_adviser", adviser), period.clone()],
        )
    };
    let steps = match template_id {
        "E0" | "E1" => {
            let ptype = if template_id == "E0" { "cash_equity" } else { "option" };
            vec![
                retrieve(
                    "s1",
                    FilingType::ThirteenF,
                    "thirteenf_holdings",
                    vec![
                        Filter::eq("manager_cik", slot(slots, "manager")?),
                        Filter::eq("position_type", ptype),
                        period.clone(),
                    ],
                ),
                aggregate("s2", "s1", AggFunction::Sum, "value", &[]),
                ret("s3", "s2", &[]),
            ]
        }
        "E2" => vec![
            retrieve(
                "s1",
                FilingType::Adv,
                "adv_entity",
                vec![Filter::eq("crd_number", slot(slots, "adviser")?), period.clone()],
            ),
            aggregate("s2", "s1", AggFunction::Sum, "regulatory_aum", &[]),
            ret("s3", "s2", &[]),
        ],
        "E3" => vec![
            census(slot(slots, "adviser")?),
            aggregate("s2", "s1", AggFunction::Distinct, "fund_id", &[]),
            ret("s3", "s2", &[]),
        ],
        "E4" => vec![
            retrieve(
                "s1",
                FilingType::Adv,
                "adv_private_funds",
                vec![Filter::eq("crd_number", slot(slots, "adviser")?), period.clone()],
            ),
            aggregate("s2", "s1", AggFunction::Distinct, "prime_broker", &[]),
            ret("s3", "s2", &[]),
        ],
        "E5" => vec![
            census(slot(slots, "adviser")?),
            retrieve("s2", FilingType::Nport, "nport_holdings", vec![period.clone()]),
            fund_join("s3", "s1", "s2"),
            aggregate("s4", "s3", AggFunction::GroupbySum, "value_usd", &["country"]),
            ret("s5", "s4", &[]),
        ],
        "E6" => vec![
            census(slot(slots, "adviser")?),
            retrieve("s2", FilingType::Nmfp, "nmfp_fund_summary", vec![period.clone()]),
            fund_join("s3", "s1", "s2"),
            ret("s4", "s3", &["series_id", "net_assets"]),
        ],
        "H0" => vec![
            retrieve(
                "s1",
                FilingType::Nport,
                "nport_holdings",
                vec![
                    Filter::eq("series_id", slot(slots, "fund")?),
                    Filter::eq("asset_category", slot(slots, "category")?),
                    period.clone(),
                ],
            ),
            ret("s2", "s1", &["holding_id", "issuer_name", "value_usd"]),
        ],
        "H1" => vec![
            census(slot(slots, "adviser")?),
            retrieve("s2", FilingType::Nport, "nport_derivatives", vec![period.clone()]),
            fund_join("s3", "s1", "s2"),
            aggregate("s4", "s3", AggFunction::GroupbySum, "notional", &["counterparty"]),
            ret("s5", "s4", &[]),
        ],
        "H2" => vec![
            retrieve(
                "s1",
                FilingType::Nport,
                "nport_baskets",
                vec![
                    Filter::eq("series_id", slot(slots, "fund")?),
                    period.clone(),
                    Filter::range("expiration_date", None, Some(Value::String(slot(slots, "date")?))),
                ],
            ),
            ret("s2", "s1", &["basket_id", "expiration_date", "value_usd"]),
        ],
        "H3" => vec![
            retrieve(
                "s1",
                FilingType::Ncsr,
                "ncsr_statement_items",
                vec![
                    Filter::eq("fund_id", slot(slots, "fund")?),
                    period.clone(),
                    Filter::contains("line_item", "total assets"),
                ],
            ),
            aggregate("s2", "s1", AggFunction::Sum, "amount", &[]),
            ret("s3", "s2", &[]),
        ],
        other => return Err(BenchError::UnknownTemplate(other.into())),
    };
    Ok(Plan::new(steps))
}
