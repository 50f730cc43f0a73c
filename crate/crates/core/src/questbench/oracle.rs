//! Hand-written solutions per template, computed directly over the view.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use serde_json::{json, Value};

use super::{BenchError, Slots};
use crate::agents::AnswerValue;
use crate::corpus::{FilingRecord, ReconciledView};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub answer: AnswerValue,
    /// Every record the answer was computed from.
    pub relevant_record_ids: BTreeSet<String>,
}

fn slot<'a>(slots: &'a Slots, name: &str) -> Result<&'a str, BenchError> {
    slots.get(name).map(String::as_str).ok_or_else(|| BenchError::MissingSlot(name.into()))
}

fn in_period<'a>(view: &'a ReconciledView, table: &'a str, period: NaiveDate) -> impl Iterator<Item = &'a FilingRecord> + 'a {
    view.table(table).filter(move |r| r.period == period)
}

fn text_is(r: &FilingRecord, field: &str, want: &str) -> bool {
    r.text(field) == Some(want)
}

fn ids<'a>(rows: impl IntoIterator<Item = &'a FilingRecord>) -> BTreeSet<String> {
    rows.into_iter().map(|r| r.record_id.clone()).collect()
}

fn sum_of(rows: &[&FilingRecord], field: &str) -> AnswerValue {
    AnswerValue::Scalar(rows.iter().filter_map(|r| r.number(field)).sum())
}

fn distinct_of(rows: &[&FilingRecord], field: &str) -> AnswerValue {
    let set: BTreeSet<String> = rows.iter().filter_map(|r| r.text(field)).map(str::to_string).collect();
    AnswerValue::List(set.into_iter().collect())
}

fn table(columns: &[&str], rows: Vec<Vec<Value>>) -> AnswerValue {
    AnswerValue::Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows }
}

/// Census rows of the adviser's funds in the period.
fn adviser_funds<'a>(view: &'a ReconciledView, adviser: &str, period: NaiveDate) -> Vec<&'a FilingRecord> {
    in_period(view, "ncen_funds", period).filter(|r| text_is(r, "investment_adviser", adviser)).collect()
}

/// Rows of a fund-level table whose `series_id` belongs to one of `funds`,
/// plus the fund rows that matched at least one of them.
fn fund_level<'a>(
    view: &'a ReconciledView,
    funds: &[&'a FilingRecord],
    table_id: &'a str,
    period: NaiveDate,
) -> (Vec<&'a FilingRecord>, Vec<&'a FilingRecord>) {
    let by_fund: HashMap<&str, &FilingRecord> =
        funds.iter().filter_map(|r| r.text("fund_id").map(|f| (f, *r))).collect();
    let mut used: BTreeMap<&str, &FilingRecord> = BTreeMap::new();
    let mut rows = Vec::new();
    for r in in_period(view, table_id, period) {
        if let Some(f) = r.text("series_id").and_then(|s| by_fund.get(s)) {
            used.insert(f.record_id.as_str(), f);
            rows.push(r);
        }
    }
    (used.into_values().collect(), rows)
}

fn group_sum(rows: &[&FilingRecord], key: &str, value: &str) -> Vec<Vec<Value>> {
    let mut groups: BTreeMap<String, f64> = BTreeMap::new();
    for r in rows {
        if let Some(k) = r.text(key) {
            *groups.entry(k.to_string()).or_default() += r.number(value).unwrap_or(0.0);
        }
    }
    groups.into_iter().map(|(k, v)| vec![json!(k), json!(v)]).collect()
}

/// Gold answer and relevant records for one template binding.
pub fn oracle_solve(template_id: &str, slots: &Slots, view: &ReconciledView) -> Result<OracleOutput, BenchError> {
    let period = NaiveDate::parse_from_str(slot(slots, "period")?, "%Y-%m-%d")
        .map_err(|_| BenchError::BadSlot("period".into()))?;
    let (answer, relevant) = match template_id {
        "E0" | "E1" => {
            let manager = slot(slots, "manager")?;
            let ptype = if template_id == "E0" { "cash_equity" } else { "option" };
            let rows: Vec<_> = in_period(view, "thirteenf_holdings", period)
                .filter(|r| text_is(r, "manager_cik", manager) && text_is(r, "position_type", ptype))
                .collect();
            (sum_of(&rows, "value"), ids(rows))
        }
        "E2" => {
            let adviser = slot(slots, "adviser")?;
            let rows: Vec<_> =
                in_period(view, "adv_entity", period).filter(|r| text_is(r, "crd_number", adviser)).collect();
            (sum_of(&rows, "regulatory_aum"), ids(rows))
        }
        "E3" => {
            let rows = adviser_funds(view, slot(slots, "adviser")?, period);
            (distinct_of(&rows, "fund_id"), ids(rows))
        }
        "E4" => {
            let adviser = slot(slots, "adviser")?;
            let rows: Vec<_> = in_period(view, "adv_private_funds", period)
                .filter(|r| text_is(r, "crd_number", adviser))
                .collect();
            (distinct_of(&rows, "prime_broker"), ids(rows))
        }
        "E5" | "H1" => {
            let funds = adviser_funds(view, slot(slots, "adviser")?, period);
            let (tbl, key, value) = if template_id == "E5" {
                ("nport_holdings", "country", "value_usd")
            } else {
                ("nport_derivatives", "counterparty", "notional")
            };
            let (used, rows) = fund_level(view, &funds, tbl, period);
            let answer = table(&[key, value], group_sum(&rows, key, value));
            (answer, ids(used.into_iter().chain(rows)))
        }
        "E6" => {
            let funds = adviser_funds(view, slot(slots, "adviser")?, period);
            let (used, rows) = fund_level(view, &funds, "nmfp_fund_summary", period);
            let cells = rows
                .iter()
                .map(|r| vec![r.column("series_id").unwrap_or(Value::Null), r.column("net_assets").unwrap_or(Value::Null)])
                .collect();
            (table(&["series_id", "net_assets"], cells), ids(used.into_iter().chain(rows)))
        }
        "H0" => {
            let (fund, code) = (slot(slots, "fund")?, slot(slots, "category")?);
            let rows: Vec<_> = in_period(view, "nport_holdings", period)
                .filter(|r| text_is(r, "series_id", fund) && text_is(r, "asset_category", code))
                .collect();
            let cells = rows
                .iter()
                .map(|r| ["holding_id", "issuer_name", "value_usd"].iter().map(|c| r.column(c).unwrap_or(Value::Null)).collect())
                .collect();
            (table(&["holding_id", "issuer_name", "value_usd"], cells), ids(rows))
        }
        "H2" => {
            let (fund, date) = (slot(slots, "fund")?, slot(slots, "date")?);
            let rows: Vec<_> = in_period(view, "nport_baskets", period)
                .filter(|r| text_is(r, "series_id", fund) && r.text("expiration_date").is_some_and(|e| e <= date))
                .collect();
            let cols = ["basket_id", "expiration_date", "value_usd"];
            let cells = rows.iter().map(|r| cols.iter().map(|c| r.column(c).unwrap_or(Value::Null)).collect()).collect();
            (table(&cols, cells), ids(rows))
        }
        "H3" => {
            let fund = slot(slots, "fund")?;
            let rows: Vec<_> = in_period(view, "ncsr_statement_items", period)
                .filter(|r| {
                    text_is(r, "fund_id", fund)
                        && r.text("line_item").is_some_and(|l| l.to_lowercase().contains("total assets"))
                })
                .collect();
            (sum_of(&rows, "amount"), ids(rows))
        }
        other => return Err(BenchError::UnknownTemplate(other.into())),
    };
    Ok(OracleOutput { answer, relevant_record_ids: relevant })
}
