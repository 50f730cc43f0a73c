use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::registry::SchemaRegistry;
use super::types::{FilingRecord, FilingType};
use super::CorpusError;

/// Lookup key for the records of one filer's table in one period.
pub type FilingKey = (FilingType, String, String, NaiveDate);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct AccessionInfo {
    filing_type: FilingType,
    filer_id: String,
    period: NaiveDate,
    amends: Option<String>,
}

/// Validated, indexed collection of filing records.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    registry: Arc<SchemaRegistry>,
    records: Vec<FilingRecord>,
    by_id: HashMap<String, usize>,
    by_key: BTreeMap<FilingKey, Vec<usize>>,
    accessions: BTreeMap<String, AccessionInfo>,
}

/// First line of an exported corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub registry_version: String,
    pub record_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number in the input file.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub store: CorpusStore,
    pub rejections: Vec<Rejection>,
}

impl CorpusStore {
    pub fn new(registry: Arc<SchemaRegistry>) -> CorpusStore {
        CorpusStore {
            registry,
            records: Vec::new(),
            by_id: HashMap::new(),
            by_key: BTreeMap::new(),
            accessions: BTreeMap::new(),
        }
    }

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

    /// Records of one (filing type, table, filer, period), in insertion order.
    pub fn lookup(
        &self,
        filing_type: FilingType,
        table_id: &str,
        filer_id: &str,
        period: NaiveDate,
    ) -> impl Iterator<Item = &FilingRecord> {
        self.by_key
            .get(&(filing_type, table_id.to_string(), filer_id.to_string(), period))
            .into_iter()
            .flatten()
            .map(|&i| &self.records[i])
    }

    pub fn accession_ids(&self) -> impl Iterator<Item = &str> {
        self.accessions.keys().map(String::as_str)
    }

    pub fn amendment_count(&self) -> usize {
        self.accessions.values().filter(|a| a.amends.is_some()).count()
    }

    pub fn filing_count(&self) -> usize {
        self.accessions.len()
    }

    /// Validates and appends a record.
    pub fn insert(&mut self, record: FilingRecord) -> Result<(), CorpusError> {
        self.registry.validate_record(&record)?;
        if self.by_id.contains_key(&record.record_id) {
            return Err(CorpusError::DuplicateRecord(record.record_id));
        }
        let info = AccessionInfo {
            filing_type: record.filing_type,
            filer_id: record.filer_id.clone(),
            period: record.period,
            amends: record.amends.clone(),
        };
        match self.accessions.get(&record.accession_id) {
            Some(existing) if *existing != info => {
                return Err(CorpusError::Invariant {
                    record_id: record.record_id,
                    reason: format!(
                        "header disagrees with other records of accession `{}`",
                        record.accession_id
                    ),
                });
            }
            Some(_) => {}
            None => {
                self.accessions.insert(record.accession_id.clone(), info);
            }
        }
        let idx = self.records.len();
        self.by_id.insert(record.record_id.clone(), idx);
        self.by_key
            .entry((
                record.filing_type,
                record.table_id.clone(),
                record.filer_id.clone(),
                record.period,
            ))
            .or_default()
            .push(idx);
        self.records.push(record);
        Ok(())
    }

    /// Loads a JSONL corpus. Invalid lines are collected as rejections; only an
    /// unreadable file fails the whole load.
    pub fn ingest_jsonl(
        path: impl AsRef<Path>,
        registry: Arc<SchemaRegistry>,
    ) -> Result<IngestOutcome, CorpusError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut store = CorpusStore::new(registry);
        let mut rejections = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| CorpusError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            if line_no == 1 {
                if let Ok(header) = serde_json::from_str::<CorpusHeader>(&line) {
                    if header.registry_version != store.registry.version() {
                        log::warn!(
                            "corpus built against registry {} but loading with {}",
                            header.registry_version,
                            store.registry.version()
                        );
                    }
                    continue;
                }
            }
            let outcome = serde_json::from_str::<FilingRecord>(&line)
                .map_err(|e| format!("malformed record: {e}"))
                .and_then(|r| store.insert(r).map_err(|e| e.to_string()));
            if let Err(reason) = outcome {
                rejections.push(Rejection { line: line_no, reason });
            }
        }
        Ok(IngestOutcome { store, rejections })
    }

    /// Writes the header line followed by one record per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = CorpusHeader {
            registry_version: self.registry.version().to_string(),
            record_count: self.records.len(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        buf
    }

    pub(crate) fn accession_header(
        &self,
        accession_id: &str,
    ) -> Option<(FilingType, &str, NaiveDate, Option<&str>)> {
        self.accessions.get(accession_id).map(|a| {
            (a.filing_type, a.filer_id.as_str(), a.period, a.amends.as_deref())
        })
    }
}
