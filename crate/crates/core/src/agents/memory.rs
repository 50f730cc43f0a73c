//! Long-term plan memory keyed by normalized query text.
//!
//! Entries are appended to a JSONL file as they are stored; opening a file
//! replays it (last entry per key wins) and rewrites it compacted.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::plan::{Plan, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub key: String,
    pub plan: Plan,
    /// Store sequence number; later stores of a key win.
    pub timestamp: u64,
}

/// Lowercased, whitespace-collapsed text with trailing punctuation removed.
pub fn normalize_query(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches(['.', '?', '!'])
        .to_lowercase()
}

#[derive(Debug, Default)]
pub struct LongTermMemory {
    entries: RwLock<BTreeMap<String, MemoryEntry>>,
    clock: AtomicU64,
    log: Option<(PathBuf, Mutex<()>)>,
}

impl LongTermMemory {
    /// Memory without persistence.
    pub fn in_memory() -> LongTermMemory {
        LongTermMemory::default()
    }

    /// Loads `path` if it exists and keeps appending to it.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<LongTermMemory> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            for (n, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: MemoryEntry = serde_json::from_str(&line).map_err(|e| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1))
                })?;
                entries.insert(entry.key.clone(), entry);
            }
        }
        let clock = entries.values().map(|e: &MemoryEntry| e.timestamp + 1).max().unwrap_or(0);
        let memory = LongTermMemory {
            entries: RwLock::new(entries),
            clock: AtomicU64::new(clock),
            log: Some((path, Mutex::new(()))),
        };
        memory.compact()?;
        Ok(memory)
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stored plan for a query, marked as coming from memory.
    pub fn get(&self, query: &str) -> Option<Plan> {
        self.entries
            .read()
            .unwrap()
            .get(&normalize_query(query))
            .map(|e| e.plan.clone().with_provenance(Provenance::Memory))
    }

    pub fn store(&self, query: &str, plan: &Plan) -> std::io::Result<()> {
        let entry = MemoryEntry {
            key: normalize_query(query),
            plan: plan.clone(),
            timestamp: self.clock.fetch_add(1, Ordering::SeqCst),
        };
        if let Some((path, lock)) = &self.log {
            let _guard = lock.lock().unwrap();
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(&entry).expect("entry serializes"))?;
        }
        let mut entries = self.entries.write().unwrap();
        // concurrent stores of one key keep the later sequence number
        match entries.get(&entry.key) {
            Some(existing) if existing.timestamp > entry.timestamp => {}
            _ => {
                entries.insert(entry.key.clone(), entry);
            }
        }
        Ok(())
    }

    /// Rewrites the backing file with one line per key.
    pub fn compact(&self) -> std::io::Result<()> {
        let Some((path, lock)) = &self.log else { return Ok(()) };
        let _guard = lock.lock().unwrap();
        let entries = self.entries.read().unwrap();
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            let mut ordered: Vec<&MemoryEntry> = entries.values().collect();
            ordered.sort_by_key(|e| e.timestamp);
            for e in ordered {
                writeln!(out, "{}", serde_json::to_string(e).expect("entry serializes"))?;
            }
            out.flush()?;
        }
        std::fs::rename(tmp, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::plan::{PlanStep, StepKind};
    use crate::corpus::FilingType;

    fn plan(table: &str) -> Plan {
        Plan::new(vec![
            PlanStep::new("s1", StepKind::Retrieve { agent: FilingType::Adv, table: table.into(), filters: vec![] }),
            PlanStep::new("s2", StepKind::Return { input: "s1".into(), columns: vec![] }),
        ])
    }

    #[test]
    fn keys_are_normalized() {
        let m = LongTermMemory::in_memory();
        m.store("Get  the AUM for ADV-0001.", &plan("adv_entity")).unwrap();
        let got = m.get("get the aum for adv-0001").unwrap();
        assert_eq!(got.provenance, Provenance::Memory);
        assert!(m.get("get the aum for adv-0002").is_none());
    }

    #[test]
    fn persists_and_compacts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("memory.jsonl");
        {
            let m = LongTermMemory::open(&path).unwrap();
            m.store("q one", &plan("adv_entity")).unwrap();
            m.store("q one", &plan("adv_clients")).unwrap();
            m.store("q two", &plan("adv_entity")).unwrap();
        }
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
        let m = LongTermMemory::open(&path).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        let StepKind::Retrieve { table, .. } = &m.get("q one").unwrap().steps[0].kind else { panic!() };
        assert_eq!(table, "adv_clients");
    }
}
