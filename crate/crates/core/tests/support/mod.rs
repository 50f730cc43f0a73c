//! Test helpers shared by the integration suites: a brute-force second oracle
//! that works over the raw store with its own amendment handling.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use regintel_core::agents::AnswerValue;
use regintel_core::corpus::{generate_synthetic, CorpusStore, FilingRecord, GeneratorConfig, SchemaRegistry};
use serde_json::{json, Value};

pub fn corpus(filers: usize, records_per_table: usize, seed: u64) -> CorpusStore {
    generate_synthetic(
        &GeneratorConfig { filers, records_per_table, ..Default::default() },
        seed,
        Arc::new(SchemaRegistry::builtin()),
    )
}

/// Records of terminal filings: for every original filing, the deepest
/// amendment below it (largest accession id among equally deep ones).
pub fn visible_records(store: &CorpusStore) -> Vec<&FilingRecord> {
    let mut amends: HashMap<&str, &str> = HashMap::new();
    let mut accessions: BTreeSet<&str> = BTreeSet::new();
    for r in store.records() {
        accessions.insert(&r.accession_id);
        if let Some(a) = &r.amends {
            amends.insert(&r.accession_id, a);
        }
    }
    let mut best: HashMap<&str, (usize, &str)> = HashMap::new();
    for &acc in &accessions {
        let mut root = acc;
        let mut depth = 0;
        while let Some(p) = amends.get(root) {
            root = p;
            depth += 1;
        }
        let e = best.entry(root).or_insert((depth, acc));
        if (depth, acc) > *e {
            *e = (depth, acc);
        }
    }
    let keep: BTreeSet<&str> = best.values().map(|(_, a)| *a).collect();
    store.records().iter().filter(|r| keep.contains(r.accession_id.as_str())).collect()
}

fn s<'a>(r: &'a FilingRecord, f: &str) -> &'a str {
    r.fields.get(f).and_then(Value::as_str).unwrap_or("")
}

fn n(r: &FilingRecord, f: &str) -> f64 {
    r.fields.get(f).and_then(Value::as_f64).unwrap_or(0.0)
}

/// Straightforward nested-loop solution of a template binding.
pub fn brute_force(template: &str, slots: &BTreeMap<String, String>, records: &[&FilingRecord]) -> (AnswerValue, BTreeSet<String>) {
    let slot = |k: &str| slots[k].as_str();
    let period = slot("period");
    let rows = |table: &str| -> Vec<&FilingRecord> {
        records.iter().copied().filter(|r| r.table_id == table && r.period.to_string() == period).collect()
    };
    let mut relevant = BTreeSet::new();
    let answer = match template {
        "E0" | "E1" => {
            let kind = if template == "E0" { "cash_equity" } else { "option" };
            let mut total = 0.0;
            for r in rows("thirteenf_holdings") {
                if s(r, "manager_cik") == slot("manager") && s(r, "position_type") == kind {
                    total += n(r, "value");
                    relevant.insert(r.record_id.clone());
                }
            }
            AnswerValue::Scalar(total)
        }
        "E2" => {
            let mut total = 0.0;
            for r in rows("adv_entity") {
                if s(r, "crd_number") == slot("adviser") {
                    total += n(r, "regulatory_aum");
                    relevant.insert(r.record_id.clone());
                }
            }
            AnswerValue::Scalar(total)
        }
        "E3" | "E4" => {
            let (table, key, out) = if template == "E3" {
                ("ncen_funds", "investment_adviser", "fund_id")
            } else {
                ("adv_private_funds", "crd_number", "prime_broker")
            };
            let mut items = Vec::new();
            for r in rows(table) {
                if s(r, key) == slot("adviser") {
                    if !items.contains(&s(r, out).to_string()) {
                        items.push(s(r, out).to_string());
                    }
                    relevant.insert(r.record_id.clone());
                }
            }
            AnswerValue::List(items)
        }
        "E5" | "H1" | "E6" => {
            let (table, key, value) = match template {
                "E5" => ("nport_holdings", "country", "value_usd"),
                "H1" => ("nport_derivatives", "counterparty", "notional"),
                _ => ("nmfp_fund_summary", "series_id", "net_assets"),
            };
            let funds = rows("ncen_funds");
            let facts = rows(table);
            let mut cells: Vec<(String, f64)> = Vec::new();
            for f in &funds {
                if s(f, "investment_adviser") != slot("adviser") {
                    continue;
                }
                for d in &facts {
                    if s(d, "series_id") == s(f, "fund_id") {
                        relevant.insert(f.record_id.clone());
                        relevant.insert(d.record_id.clone());
                        let k = s(d, key).to_string();
                        if template == "E6" {
                            cells.push((k, n(d, value)));
                        } else if let Some(c) = cells.iter_mut().find(|c| c.0 == k) {
                            c.1 += n(d, value);
                        } else {
                            cells.push((k, n(d, value)));
                        }
                    }
                }
            }
            AnswerValue::Table {
                columns: vec![key.into(), value.into()],
                rows: cells.into_iter().map(|(k, v)| vec![json!(k), json!(v)]).collect(),
            }
        }
        "H0" | "H2" => {
            let (table, cols) = if template == "H0" {
                ("nport_holdings", ["holding_id", "issuer_name", "value_usd"])
            } else {
                ("nport_baskets", ["basket_id", "expiration_date", "value_usd"])
            };
            let mut out = Vec::new();
            for r in rows(table) {
                if s(r, "series_id") != slot("fund") {
                    continue;
                }
                let keep = if template == "H0" {
                    s(r, "asset_category") == slot("category")
                } else {
                    s(r, "expiration_date") <= slot("date")
                };
                if keep {
                    relevant.insert(r.record_id.clone());
                    out.push(cols.iter().map(|c| r.fields.get(*c).cloned().unwrap_or(Value::Null)).collect());
                }
            }
            AnswerValue::Table { columns: cols.iter().map(|c| c.to_string()).collect(), rows: out }
        }
        "H3" => {
            let mut total = 0.0;
            for r in rows("ncsr_statement_items") {
                if s(r, "fund_id") == slot("fund") && s(r, "line_item").to_lowercase().contains("total assets") {
                    total += n(r, "amount");
                    relevant.insert(r.record_id.clone());
                }
            }
            AnswerValue::Scalar(total)
        }
        other => panic!("unknown template {other}"),
    };
    (answer, relevant)
}
