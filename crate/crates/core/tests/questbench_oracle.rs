mod support;

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use regintel_core::agents::AnswerValue;
use regintel_core::corpus::{reconcile, CorpusStore, FilingRecord, FilingType, SchemaRegistry};
use regintel_core::eval::{judge_success, Tolerances};
use regintel_core::questbench::{oracle_solve, Sampler, Slots, TEMPLATES};

fn record(id: &str, ft: FilingType, table: &str, filer: &str, fields: serde_json::Value) -> FilingRecord {
    FilingRecord {
        record_id: id.into(),
        accession_id: format!("{filer}-{table}"),
        filing_type: ft,
        table_id: table.into(),
        filer_id: filer.into(),
        period: NaiveDate::from_ymd_opt(2024, 3, 31).unwrap(),
        is_amendment: false,
        amends: None,
        fields: serde_json::from_value(fields).unwrap(),
    }
}

fn slots(pairs: &[(&str, &str)]) -> Slots {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn two_oracles_agree_on_500_instances_per_template() {
    let store = support::corpus(10, 6, 21);
    let view = reconcile(&store).unwrap();
    let raw = support::visible_records(&store);
    let tol = Tolerances::default();
    for (ti, t) in TEMPLATES.iter().enumerate() {
        let sampler = Sampler::new(t, &view).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(ti as u64);
        for k in 0..500 {
            let inst = sampler.instantiate(&mut rng, k.to_string());
            let (answer, relevant) = support::brute_force(t.id, &inst.slots, &raw);
            assert!(judge_success(&inst.gold_answer, &answer, &tol), "{} {:?}", t.id, inst.slots);
            assert_eq!(inst.relevant_record_ids, relevant, "{} {:?}", t.id, inst.slots);
            assert_eq!(inst.gold_answer.answer_type(), t.answer_type);
            assert!(inst.relevant_record_ids.iter().all(|id| view.contains(id)));
        }
    }
}

#[test]
fn cash_equity_sum_of_two_positions() {
    let mut store = CorpusStore::new(Arc::new(SchemaRegistry::builtin()));
    for (id, value, kind) in [("p1", 100.0, "cash_equity"), ("p2", 250.5, "cash_equity"), ("p3", 9.0, "option")] {
        store
            .insert(record(
                id,
                FilingType::ThirteenF,
                "thirteenf_holdings",
                "MGR-0001",
                json!({"manager_cik": "MGR-0001", "position_type": kind, "value": value}),
            ))
            .unwrap();
    }
    let view = reconcile(&store).unwrap();
    let out = oracle_solve("E0", &slots(&[("manager", "MGR-0001"), ("period", "2024-03-31")]), &view).unwrap();
    assert_eq!(out.answer, AnswerValue::Scalar(350.5));
    assert_eq!(out.relevant_record_ids, BTreeSet::from(["p1".to_string(), "p2".to_string()]));
}

#[test]
fn funds_of_an_adviser() {
    let mut store = CorpusStore::new(Arc::new(SchemaRegistry::builtin()));
    for (id, fund, adviser) in [("n1", "f1", "ADV-0001"), ("n2", "f2", "ADV-0001"), ("n3", "f3", "ADV-0002")] {
        store
            .insert(record(
                id,
                FilingType::Ncen,
                "ncen_funds",
                "TRUST-0001",
                json!({"fund_id": fund, "investment_adviser": adviser}),
            ))
            .unwrap();
    }
    let view = reconcile(&store).unwrap();
    let out = oracle_solve("E3", &slots(&[("adviser", "ADV-0001"), ("period", "2024-03-31")]), &view).unwrap();
    assert_eq!(out.answer, AnswerValue::List(vec!["f1".into(), "f2".into()]));
}

#[test]
fn derivative_notional_matches_nested_loop_on_a_fund_family() {
    // one adviser, three funds, 50 derivative holdings spread across them
    // plus a fund of another adviser that must be ignored
    let mut store = CorpusStore::new(Arc::new(SchemaRegistry::builtin()));
    for (i, adviser) in ["ADV-0001", "ADV-0001", "ADV-0001", "ADV-0002"].iter().enumerate() {
        store
            .insert(record(
                &format!("fund{i}"),
                FilingType::Ncen,
                "ncen_funds",
                "TRUST-0001",
                json!({"fund_id": format!("FUND-{i:04}"), "investment_adviser": adviser}),
            ))
            .unwrap();
    }
    let counterparties = ["Alpha Bank", "Beta Securities", "Gamma Capital", "Delta Markets"];
    for j in 0..50 {
        let fund = format!("FUND-{:04}", j % 4);
        store
            .insert(FilingRecord {
                accession_id: format!("{fund}-nport"),
                filer_id: fund.clone(),
                ..record(
                    &format!("d{j:02}"),
                    FilingType::Nport,
                    "nport_derivatives",
                    &fund,
                    json!({
                        "series_id": fund,
                        "counterparty": counterparties[(j / 4) % 4],
                        "notional": 1000.0 + 37.25 * j as f64,
                    }),
                )
            })
            .unwrap();
    }
    let view = reconcile(&store).unwrap();
    let s = slots(&[("adviser", "ADV-0001"), ("period", "2024-03-31")]);
    let out = oracle_solve("H1", &s, &view).unwrap();
    let raw = support::visible_records(&store);
    let (naive, relevant) = support::brute_force("H1", &s, &raw);
    assert!(judge_success(&out.answer, &naive, &Tolerances::default()));
    assert_eq!(out.relevant_record_ids, relevant);
    // 3 funds plus the 38 derivatives that belong to them (j % 4 != 3)
    assert_eq!(relevant.len(), 3 + 38);
    let AnswerValue::Table { rows, .. } = &out.answer else { panic!() };
    assert_eq!(rows.len(), 4);
}
