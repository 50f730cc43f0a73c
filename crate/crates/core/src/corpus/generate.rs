//! Seeded synthetic corpus at desk scale.
//!
//! Entity layout for `filers = n`: `n` 13F managers (`MGR-*`), `n` advisers
//! (`ADV-*`), `max(1, n/2)` trusts (`TRUST-*`) and `2n` funds (`FUND-*`).
//! Fund `i` belongs to trust `i % trusts` and is managed by adviser `i % n`;
//! every fourth fund is a money market fund. N-CEN filings are made per trust
//! and list the trust's funds, which is the trust to fund mapping the fund-level
//! filings (N-PORT, N-MFP, N-CSR) join against.

use std::sync::Arc;

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::registry::SchemaRegistry;
use super::store::CorpusStore;
use super::types::{FilingRecord, FilingType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Rows per filing in each list-valued table.
    pub records_per_table: usize,
    pub filers: usize,
    pub periods: Vec<NaiveDate>,
    #[serde(default = "default_amendment_fraction")]
    pub amendment_fraction: f64,
    /// Longest amendment chain generated on top of an original filing.
    #[serde(default = "default_max_depth")]
    pub max_amendment_depth: usize,
}

fn default_amendment_fraction() -> f64 {
    0.1
}

fn default_max_depth() -> usize {
    1
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            records_per_table: 8,
            filers: 12,
            periods: vec![
                NaiveDate::from_ymd_opt(2023, 12, 31).unwrap(),
                NaiveDate::from_ymd_opt(2024, 3, 31).unwrap(),
            ],
            amendment_fraction: default_amendment_fraction(),
            max_amendment_depth: default_max_depth(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.periods.is_empty() {
            return Err("at least one period is required".into());
        }
        if !(0.0..=1.0).contains(&self.amendment_fraction) {
            return Err("amendment_fraction must lie in [0, 1]".into());
        }
        Ok(())
    }
}

const WORDS: [&str; 16] = [
    "Alpine", "Beacon", "Cedar", "Delta", "Evergreen", "Falcon", "Granite", "Harbor", "Iron",
    "Juniper", "Keystone", "Lighthouse", "Meridian", "Northstar", "Oakridge", "Pinnacle",
];
const SUFFIXES: [&str; 4] = ["Capital", "Asset Management", "Advisors", "Partners"];
const STYLES: [&str; 6] = ["Growth", "Income", "Value", "Global", "Municipal", "Treasury"];
const ISSUERS: [&str; 12] = [
    "Apple Inc", "Microsoft Corp", "Toyota Motor", "Nestle SA", "Shell PLC", "Siemens AG",
    "US Treasury", "Samsung Electronics", "Petrobras", "Royal Bank of Canada", "Alibaba Group",
    "TotalEnergies",
];
const COUNTRIES: [&str; 8] = ["US", "GB", "JP", "DE", "FR", "CA", "CN", "BR"];
const ASSET_CATEGORIES: [&str; 6] = ["EC", "DBT", "STIV", "RA", "DE", "EP"];
const DERIVATIVE_TYPES: [&str; 4] = ["swap", "future", "forward", "option"];
const COUNTERPARTIES: [&str; 6] = [
    "Goldman Sachs International", "JPMorgan Chase Bank", "Morgan Stanley & Co", "Barclays Bank",
    "BNP Paribas", "Citibank NA",
];
const PRIME_BROKERS: [&str; 8] = [
    "Goldman Sachs", "Morgan Stanley", "JPMorgan", "UBS", "Credit Suisse", "BNP Paribas",
    "Barclays", "Deutsche Bank",
];
const CUSTODIANS: [&str; 4] = ["State Street", "BNY Mellon", "Northern Trust", "Citibank"];
const CLIENT_TYPES: [&str; 6] = [
    "individuals", "high_net_worth", "pension_plans", "pooled_vehicles", "charities", "insurance",
];
const MMF_CATEGORIES: [&str; 4] = ["treasury", "repo", "commercial_paper", "agency"];
const FUND_TYPES: [&str; 3] = ["equity", "bond", "multi_asset"];
/// Filer-specific spellings of the total-assets line item.
pub const TOTAL_ASSETS_VARIANTS: [&str; 5] = [
    "Total assets",
    "TOTAL ASSETS",
    "Total Assets:",
    "Total assets (at value)",
    "total assets",
];
const OTHER_LINE_ITEMS: [(&str, &str); 4] = [
    ("assets_liabilities", "Total liabilities"),
    ("assets_liabilities", "Net assets"),
    ("operations", "Total investment income"),
    ("operations", "Net realized gain"),
];

#[derive(Debug, Clone)]
struct Fund {
    id: String,
    name: String,
    trust: usize,
    adviser: usize,
    money_market: bool,
    fund_type: &'static str,
}

fn money(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let cents = rng.gen_range((lo * 100.0) as i64..(hi * 100.0) as i64);
    cents as f64 / 100.0
}

fn entity_name(i: usize) -> String {
    format!("{} {}", WORDS[i % WORDS.len()], SUFFIXES[(i / WORDS.len()) % SUFFIXES.len()])
}

pub fn manager_id(i: usize) -> String {
    format!("MGR-{i:04}")
}

pub fn adviser_id(i: usize) -> String {
    format!("ADV-{i:04}")
}

pub fn trust_id(i: usize) -> String {
    format!("TRUST-{i:04}")
}

pub fn fund_id(i: usize) -> String {
    format!("FUND-{i:04}")
}

struct Builder<'a> {
    store: CorpusStore,
    rng: ChaCha8Rng,
    config: &'a GeneratorConfig,
    next_record: usize,
    next_accession: usize,
}

impl Builder<'_> {
    /// Adds one filing, then with probability `amendment_fraction` a chain of
    /// amendments that restate its rows with revised numbers.
    fn filing(
        &mut self,
        filing_type: FilingType,
        filer_id: &str,
        period: NaiveDate,
        rows: Vec<(&'static str, Map<String, Value>)>,
    ) {
        if rows.is_empty() {
            return;
        }
        let mut accession = self.emit(filing_type, filer_id, period, None, &rows);
        if self.config.max_amendment_depth > 0 && self.rng.gen_bool(self.config.amendment_fraction)
        {
            let depth = self.rng.gen_range(1..=self.config.max_amendment_depth);
            let mut current = rows;
            for _ in 0..depth {
                current = current
                    .into_iter()
                    .map(|(table, fields)| (table, self.revise(fields)))
                    .collect();
                accession = self.emit(filing_type, filer_id, period, Some(accession), &current);
            }
        }
    }

    fn revise(&mut self, fields: Map<String, Value>) -> Map<String, Value> {
        let factor = 1.0 + self.rng.gen_range(1..=20) as f64 / 100.0;
        fields
            .into_iter()
            .map(|(k, v)| match v.as_f64() {
                Some(x) if v.is_f64() => (k, json!(((x * factor) * 100.0).round() / 100.0)),
                _ => (k, v),
            })
            .collect()
    }

    fn emit(
        &mut self,
        filing_type: FilingType,
        filer_id: &str,
        period: NaiveDate,
        amends: Option<String>,
        rows: &[(&'static str, Map<String, Value>)],
    ) -> String {
        let accession_id = format!("ACC-{:07}", self.next_accession);
        self.next_accession += 1;
        for (table, fields) in rows {
            let record = FilingRecord {
                record_id: format!("REC-{:08}", self.next_record),
                accession_id: accession_id.clone(),
                filing_type,
                table_id: (*table).to_string(),
                filer_id: filer_id.to_string(),
                period,
                is_amendment: amends.is_some(),
                amends: amends.clone(),
                fields: fields.clone().into_iter().collect(),
            };
            self.next_record += 1;
            self.store.insert(record).expect("generated records satisfy the registry");
        }
        accession_id
    }
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// Generates a corpus that is a pure function of `(config, seed)`.
pub fn generate_synthetic(
    config: &GeneratorConfig,
    seed: u64,
    registry: Arc<SchemaRegistry>,
) -> CorpusStore {
    let mut b = Builder {
        store: CorpusStore::new(registry),
        rng: ChaCha8Rng::seed_from_u64(seed),
        config,
        next_record: 0,
        next_accession: 0,
    };
    let n = config.filers;
    let rpt = config.records_per_table;
    if n == 0 || rpt == 0 {
        return b.store;
    }
    let n_trusts = (n / 2).max(1);
    let funds: Vec<Fund> = (0..2 * n)
        .map(|i| {
            let money_market = i % 4 == 3;
            Fund {
                id: fund_id(i),
                name: format!(
                    "{} {} Fund",
                    WORDS[(i % n) % WORDS.len()],
                    if money_market { "Money Market" } else { STYLES[i % STYLES.len()] }
                ),
                trust: i % n_trusts,
                adviser: i % n,
                money_market,
                fund_type: if money_market { "money_market" } else { FUND_TYPES[i % 3] },
            }
        })
        .collect();

    for &period in &config.periods {
        // 13F
        for m in 0..n {
            let mid = manager_id(m);
            let rows = (0..rpt)
                .map(|row| {
                    let roll = b.rng.gen_range(0..100);
                    let (ptype, put_call) = if roll < 60 {
                        ("cash_equity", Value::Null)
                    } else if roll < 85 {
                        ("option", json!(if b.rng.gen_bool(0.5) { "PUT" } else { "CALL" }))
                    } else {
                        ("debt", Value::Null)
                    };
                    let issuer = ISSUERS[b.rng.gen_range(0..ISSUERS.len())];
                    let cusip = format!("C{:04}{:04}", row, b.rng.gen_range(0..10_000));
                    let shares = b.rng.gen_range(100..100_000) as f64;
                    let value = money(&mut b.rng, 1_000.0, 5_000_000.0);
                    ("thirteenf_holdings", obj(json!({
                        "manager_name": entity_name(m), "manager_cik": mid, "issuer_name": issuer,
                        "cusip": cusip, "position_type": ptype, "put_call": put_call,
                        "shares": shares, "value": value,
                    })))
                })
                .collect();
            b.filing(FilingType::ThirteenF, &mid, period, rows);
        }

        // ADV
        for a in 0..n {
            let aid = adviser_id(a);
            let state = ["NY", "CA", "MA", "TX", "IL"][a % 5];
            let mut rows = vec![(
                "adv_entity",
                obj(json!({
                    "adviser_name": entity_name(a), "crd_number": aid,
                    "regulatory_aum": money(&mut b.rng, 1.0e7, 5.0e10),
                    "employees": b.rng.gen_range(5..5000) as f64,
                    "state": state,
                })),
            )];
            for row in 0..(rpt / 2).max(1) {
                let pb = PRIME_BROKERS[b.rng.gen_range(0..PRIME_BROKERS.len())];
                let custodian = CUSTODIANS[b.rng.gen_range(0..CUSTODIANS.len())];
                rows.push((
                    "adv_private_funds",
                    obj(json!({
                        "crd_number": aid, "private_fund_id": format!("PF-{a:04}-{row:03}"),
                        "private_fund_name": format!("{} Private Fund {}", WORDS[a % WORDS.len()], row),
                        "prime_broker": pb, "custodian": custodian,
                        "gross_asset_value": money(&mut b.rng, 1.0e6, 2.0e9),
                    })),
                ));
            }
            let mut types = CLIENT_TYPES.to_vec();
            types.shuffle(&mut b.rng);
            for ct in types.into_iter().take(rpt.min(CLIENT_TYPES.len())) {
                rows.push((
                    "adv_clients",
                    obj(json!({
                        "crd_number": aid, "client_type": ct,
                        "client_count": b.rng.gen_range(1..500) as f64,
                        "client_aum": money(&mut b.rng, 1.0e5, 1.0e9),
                    })),
                ));
            }
            b.filing(FilingType::Adv, &aid, period, rows);
        }

        // N-CEN, per trust
        for t in 0..n_trusts {
            let tid = trust_id(t);
            let mut rows = Vec::new();
            for f in funds.iter().filter(|f| f.trust == t) {
                let classes: Vec<Value> = ["A", "C", "I", "R6"]
                    .iter()
                    .take(b.rng.gen_range(1..=4))
                    .map(|c| json!(c))
                    .collect();
                rows.push((
                    "ncen_funds",
                    obj(json!({
                        "fund_id": f.id, "fund_name": f.name, "fund_type": f.fund_type,
                        "investment_adviser": adviser_id(f.adviser),
                        "adviser_name": entity_name(f.adviser), "share_classes": classes,
                    })),
                ));
            }
            for u in 0..rpt.min(3) {
                rows.push((
                    "ncen_underwriters",
                    obj(json!({
                        "underwriter_id": format!("UW-{:03}", (t + u) % 7),
                        "underwriter_name": format!("{} Distributors", WORDS[(t + u) % 7]),
                        "is_affiliated": if u == 0 { "Y" } else { "N" },
                    })),
                ));
            }
            b.filing(FilingType::Ncen, &tid, period, rows);
        }

        // N-PORT and N-MFP, per fund
        for f in &funds {
            if f.money_market {
                let mut rows = vec![(
                    "nmfp_fund_summary",
                    obj(json!({
                        "series_id": f.id, "fund_name": f.name,
                        "net_assets": money(&mut b.rng, 1.0e7, 2.0e10),
                        "seven_day_yield": b.rng.gen_range(100..600) as f64 / 10_000.0,
                        "weighted_avg_maturity": b.rng.gen_range(5..60) as f64,
                    })),
                )];
                for row in 0..rpt {
                    let cat = MMF_CATEGORIES[b.rng.gen_range(0..MMF_CATEGORIES.len())];
                    let maturity = period + Days::new(b.rng.gen_range(1..397));
                    rows.push((
                        "nmfp_holdings",
                        obj(json!({
                            "series_id": f.id, "security_id": format!("MS-{row:04}"),
                            "issuer_name": ISSUERS[b.rng.gen_range(0..ISSUERS.len())],
                            "category": cat, "maturity_date": maturity.to_string(),
                            "amortized_cost": money(&mut b.rng, 1.0e4, 5.0e7),
                        })),
                    ));
                }
                b.filing(FilingType::Nmfp, &f.id, period, rows);
            } else {
                let mut rows = Vec::new();
                for row in 0..rpt {
                    rows.push((
                        "nport_holdings",
                        obj(json!({
                            "holding_id": format!("H-{row:05}"), "series_id": f.id,
                            "fund_name": f.name,
                            "issuer_name": ISSUERS[b.rng.gen_range(0..ISSUERS.len())],
                            "asset_category": ASSET_CATEGORIES[b.rng.gen_range(0..ASSET_CATEGORIES.len())],
                            "country": COUNTRIES[b.rng.gen_range(0..COUNTRIES.len())],
                            "balance": b.rng.gen_range(10..1_000_000) as f64,
                            "value_usd": money(&mut b.rng, 100.0, 1.0e7),
                        })),
                    ));
                }
                for row in 0..(rpt / 2).max(1) {
                    rows.push((
                        "nport_derivatives",
                        obj(json!({
                            "derivative_id": format!("D-{row:05}"), "series_id": f.id,
                            "fund_name": f.name,
                            "derivative_type": DERIVATIVE_TYPES[b.rng.gen_range(0..DERIVATIVE_TYPES.len())],
                            "counterparty": COUNTERPARTIES[b.rng.gen_range(0..COUNTERPARTIES.len())],
                            "notional": money(&mut b.rng, 1.0e4, 5.0e7),
                            "unrealized_value": money(&mut b.rng, -1.0e6, 1.0e6),
                        })),
                    ));
                }
                for row in 0..(rpt / 4).max(1) {
                    let expiry = period + Days::new(b.rng.gen_range(30..730));
                    rows.push((
                        "nport_baskets",
                        obj(json!({
                            "basket_id": format!("B-{row:05}"), "series_id": f.id,
                            "fund_name": f.name,
                            "basket_name": format!("{} Custom Basket {}", WORDS[b.rng.gen_range(0..WORDS.len())], row),
                            "expiration_date": expiry.to_string(),
                            "components": b.rng.gen_range(5..60) as f64,
                            "value_usd": money(&mut b.rng, 1.0e4, 2.0e7),
                        })),
                    ));
                }
                b.filing(FilingType::Nport, &f.id, period, rows);
            }
        }

        // N-CSR, per trust, one block of line items per fund
        for t in 0..n_trusts {
            let tid = trust_id(t);
            let total_label = TOTAL_ASSETS_VARIANTS[t % TOTAL_ASSETS_VARIANTS.len()];
            let mut rows = Vec::new();
            for f in funds.iter().filter(|f| f.trust == t) {
                let total = money(&mut b.rng, 1.0e7, 5.0e9);
                rows.push((
                    "ncsr_statement_items",
                    obj(json!({
                        "fund_id": f.id, "fund_name": f.name, "statement": "assets_liabilities",
                        "line_item": total_label, "amount": total,
                    })),
                ));
                for (statement, item) in OTHER_LINE_ITEMS {
                    rows.push((
                        "ncsr_statement_items",
                        obj(json!({
                            "fund_id": f.id, "fund_name": f.name, "statement": statement,
                            "line_item": item, "amount": money(&mut b.rng, 1.0e5, 1.0e9),
                        })),
                    ));
                }
                for row in 0..(rpt / 2).max(1) {
                    rows.push((
                        "ncsr_schedule_investments",
                        obj(json!({
                            "fund_id": f.id,
                            "security": format!("{} {}", ISSUERS[b.rng.gen_range(0..ISSUERS.len())], row),
                            "shares": b.rng.gen_range(100..100_000) as f64,
                            "fair_value": money(&mut b.rng, 1.0e3, 1.0e7),
                        })),
                    ));
                }
                rows.push((
                    "ncsr_financial_highlights",
                    obj(json!({
                        "fund_id": f.id,
                        "nav_per_share": money(&mut b.rng, 5.0, 200.0),
                        "total_return": b.rng.gen_range(-2000..4000) as f64 / 10_000.0,
                        "expense_ratio": b.rng.gen_range(5..150) as f64 / 10_000.0,
                        "turnover": b.rng.gen_range(1..200) as f64 / 100.0,
                    })),
                ));
            }
            b.filing(FilingType::Ncsr, &tid, period, rows);
        }
    }
    b.store
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::reconcile;
    use std::collections::{BTreeSet, HashSet};

    fn registry() -> Arc<SchemaRegistry> {
        Arc::new(SchemaRegistry::builtin())
    }

    #[test]
    fn zero_rows_gives_empty_store() {
        let cfg = GeneratorConfig { records_per_table: 0, ..Default::default() };
        let s = generate_synthetic(&cfg, 1, registry());
        assert!(s.is_empty());
        assert_eq!(s.registry().profiles().len(), 6);
    }

    #[test]
    fn deterministic_export() {
        let cfg = GeneratorConfig::default();
        let a = generate_synthetic(&cfg, 7, registry()).to_jsonl_bytes();
        let b = generate_synthetic(&cfg, 7, registry()).to_jsonl_bytes();
        assert_eq!(a, b);
        let c = generate_synthetic(&cfg, 8, registry()).to_jsonl_bytes();
        assert_ne!(a, c);
    }

    #[test]
    fn every_table_populated() {
        let s = generate_synthetic(&GeneratorConfig::default(), 3, registry());
        let tables: BTreeSet<_> = s.records().iter().map(|r| r.table_id.as_str()).collect();
        for t in s.registry().tables() {
            assert!(tables.contains(t.table_id.as_str()), "{} empty", t.table_id);
        }
    }

    #[test]
    fn amendment_fraction_respected() {
        // 50 filers x 4 periods: 50 13F + 50 ADV + 25 NCEN + 100 fund + 25 NCSR = 250 per period
        let cfg = GeneratorConfig {
            records_per_table: 1,
            filers: 50,
            periods: (1..=4).map(|q| NaiveDate::from_ymd_opt(2023, q * 3, 28).unwrap()).collect(),
            amendment_fraction: 0.1,
            max_amendment_depth: 1,
        };
        let s = generate_synthetic(&cfg, 11, registry());
        let originals = s.filing_count() - s.amendment_count();
        assert_eq!(originals, 1000);
        let amendments = s.amendment_count();
        // binomial(1000, 0.1): sd ~ 9.5
        assert!((60..=140).contains(&amendments), "{amendments}");
        let accs: HashSet<_> = s.records().iter().map(|r| r.accession_id.as_str()).collect();
        for r in s.records() {
            if let Some(t) = &r.amends {
                assert!(accs.contains(t.as_str()));
            }
        }
        assert!(reconcile(&s).is_ok());
    }

    #[test]
    fn fund_filers_appear_in_census() {
        let s = generate_synthetic(&GeneratorConfig::default(), 5, registry());
        let census: HashSet<_> = s
            .records()
            .iter()
            .filter(|r| r.table_id == "ncen_funds")
            .filter_map(|r| r.text("fund_id"))
            .collect();
        for r in s.records() {
            if matches!(r.filing_type, FilingType::Nport | FilingType::Nmfp) {
                assert!(census.contains(r.filer_id.as_str()));
            }
        }
    }

    #[test]
    fn key_fields_unique_in_view() {
        let s = generate_synthetic(&GeneratorConfig::default(), 9, registry());
        let v = reconcile(&s).unwrap();
        let mut seen = HashSet::new();
        for r in v.records() {
            let schema = v.registry().table(&r.table_id).unwrap();
            let key: Vec<String> =
                schema.key_fields.iter().map(|k| format!("{:?}", r.get(k))).collect();
            assert!(
                seen.insert((r.filing_type, r.filer_id.clone(), r.period, r.table_id.clone(), key)),
                "duplicate key in {}",
                r.record_id
            );
        }
    }
}
