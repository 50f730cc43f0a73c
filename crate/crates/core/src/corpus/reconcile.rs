//! Amendment reconciliation.
//!
//! Filings linked through `amends` form chains rooted at an original filing.
//! Only the terminal filing of each chain stays visible: the deepest one,
//! with the greatest accession id winning among equally deep branches.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::registry::SchemaRegistry;
use super::store::CorpusStore;
use super::types::{FilingRecord, FilingType};
use super::CorpusError;

/// The effective records of a store after amendments are applied.
#[derive(Debug, Clone)]
pub struct ReconciledView {
    registry: Arc<SchemaRegistry>,
    records: Vec<FilingRecord>,
    by_id: HashMap<String, usize>,
    by_table: BTreeMap<String, Vec<usize>>,
    superseded: BTreeSet<String>,
}

impl ReconciledView {
    pub fn registry(&self) -> &Arc<SchemaRegistry> {
        &self.registry
    }

    pub fn records(&self) -> &[FilingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, record_id: &str) -> Option<&FilingRecord> {
        self.by_id.get(record_id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, record_id: &str) -> bool {
        self.by_id.contains_key(record_id)
    }

    pub fn table(&self, table_id: &str) -> impl Iterator<Item = &FilingRecord> {
        self.by_table.get(table_id).into_iter().flatten().map(|&i| &self.records[i])
    }

    pub fn filing_type(&self, ft: FilingType) -> impl Iterator<Item = &FilingRecord> {
        self.records.iter().filter(move |r| r.filing_type == ft)
    }

    /// Accession ids hidden by a later amendment.
    pub fn superseded_accessions(&self) -> &BTreeSet<String> {
        &self.superseded
    }
}

/// Builds the effective view: one visible filing per amendment chain.
pub fn reconcile(store: &CorpusStore) -> Result<ReconciledView, CorpusError> {
    let accessions: Vec<&str> = store.accession_ids().collect();
    let mut parent: HashMap<&str, &str> = HashMap::new();
    for &acc in &accessions {
        let (ft, filer, period, amends) = store.accession_header(acc).unwrap();
        if let Some(target) = amends {
            let Some((tft, tfiler, tperiod, _)) = store.accession_header(target) else {
                return Err(CorpusError::DanglingAmendment {
                    accession_id: acc.to_string(),
                    target: target.to_string(),
                });
            };
            if tft != ft || tfiler != filer || tperiod != period {
                return Err(CorpusError::AmendmentMismatch {
                    accession_id: acc.to_string(),
                    target: target.to_string(),
                });
            }
            parent.insert(acc, target);
        }
    }

    // root and depth per accession; a walk longer than the accession count is a cycle
    let mut root_of: HashMap<&str, (&str, usize)> = HashMap::new();
    for &acc in &accessions {
        let mut cur = acc;
        let mut depth = 0usize;
        while let Some(&p) = parent.get(cur) {
            depth += 1;
            if depth > accessions.len() {
                return Err(CorpusError::CyclicAmendment { accession_id: acc.to_string() });
            }
            cur = p;
        }
        root_of.insert(acc, (cur, depth));
    }

    let mut terminal: HashMap<&str, (usize, &str)> = HashMap::new();
    for (&acc, &(root, depth)) in &root_of {
        let slot = terminal.entry(root).or_insert((depth, acc));
        if (depth, acc) > *slot {
            *slot = (depth, acc);
        }
    }
    let visible: BTreeSet<&str> = terminal.values().map(|&(_, acc)| acc).collect();
    let superseded: BTreeSet<String> = accessions
        .iter()
        .filter(|a| !visible.contains(*a))
        .map(|a| a.to_string())
        .collect();

    let mut records = Vec::new();
    let mut by_id = HashMap::new();
    let mut by_table: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in store.records() {
        if visible.contains(r.accession_id.as_str()) {
            let idx = records.len();
            by_id.insert(r.record_id.clone(), idx);
            by_table.entry(r.table_id.clone()).or_default().push(idx);
            records.push(r.clone());
        }
    }
    Ok(ReconciledView {
        registry: store.registry().clone(),
        records,
        by_id,
        by_table,
        superseded,
    })
}
