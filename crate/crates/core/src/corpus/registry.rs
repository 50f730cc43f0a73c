use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::types::{AgentProfile, FieldKind, FilingRecord, FilingType, TableSchema};
use super::CorpusError;

const BUILTIN_REGISTRY: &str = include_str!("../../assets/registry.json");

#[derive(Deserialize)]
struct RegistryDocument {
    version: String,
    profiles: Vec<AgentProfile>,
    tables: Vec<TableSchema>,
}

/// Versioned set of table schemas and agent profiles.
#[derive(Debug, Clone, Serialize)]
pub struct SchemaRegistry {
    version: String,
    tables: Vec<TableSchema>,
    profiles: Vec<AgentProfile>,
    #[serde(skip)]
    by_id: BTreeMap<String, usize>,
}

impl SchemaRegistry {
    /// The registry shipped with the crate.
    pub fn builtin() -> SchemaRegistry {
        SchemaRegistry::from_json(BUILTIN_REGISTRY).expect("built-in registry is valid")
    }

    pub fn from_json(json: &str) -> Result<SchemaRegistry, CorpusError> {
        let doc: RegistryDocument =
            serde_json::from_str(json).map_err(|e| CorpusError::Registry(e.to_string()))?;
        SchemaRegistry::new(doc.version, doc.tables, doc.profiles)
    }

    pub fn new(
        version: String,
        tables: Vec<TableSchema>,
        mut profiles: Vec<AgentProfile>,
    ) -> Result<SchemaRegistry, CorpusError> {
        let mut by_id = BTreeMap::new();
        for (i, t) in tables.iter().enumerate() {
            if by_id.insert(t.table_id.clone(), i).is_some() {
                return Err(CorpusError::Registry(format!("duplicate table_id `{}`", t.table_id)));
            }
            let mut names = HashSet::new();
            for f in &t.fields {
                if !names.insert(f.name.as_str()) {
                    return Err(CorpusError::Registry(format!(
                        "table `{}` declares field `{}` twice",
                        t.table_id, f.name
                    )));
                }
            }
            for k in &t.key_fields {
                if !names.contains(k.as_str()) {
                    return Err(CorpusError::Registry(format!(
                        "table `{}` key field `{k}` is not a field",
                        t.table_id
                    )));
                }
            }
        }
        for ft in FilingType::ALL {
            let owned = tables.iter().filter(|t| t.filing_type == ft).count();
            if owned == 0 {
                return Err(CorpusError::Registry(format!("filing type {ft} owns no table")));
            }
            if ft == FilingType::ThirteenF && owned != 1 {
                return Err(CorpusError::Registry("13F must own exactly one table".into()));
            }
        }
        if profiles.len() != FilingType::ALL.len() {
            return Err(CorpusError::Registry(format!(
                "expected {} agent profiles, found {}",
                FilingType::ALL.len(),
                profiles.len()
            )));
        }
        profiles.sort_by_key(|p| p.filing_type.ordinal());
        for (p, ft) in profiles.iter_mut().zip(FilingType::ALL) {
            if p.filing_type != ft {
                return Err(CorpusError::Registry(format!("missing profile for {ft}")));
            }
            p.table_ids = tables
                .iter()
                .filter(|t| t.filing_type == ft)
                .map(|t| t.table_id.clone())
                .collect();
        }
        Ok(SchemaRegistry { version, tables, profiles, by_id })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn tables(&self) -> &[TableSchema] {
        &self.tables
    }

    pub fn table(&self, table_id: &str) -> Option<&TableSchema> {
        self.by_id.get(table_id).map(|&i| &self.tables[i])
    }

    pub fn tables_for(&self, ft: FilingType) -> impl Iterator<Item = &TableSchema> {
        self.tables.iter().filter(move |t| t.filing_type == ft)
    }

    pub fn profiles(&self) -> &[AgentProfile] {
        &self.profiles
    }

    pub fn profile(&self, ft: FilingType) -> &AgentProfile {
        &self.profiles[ft.ordinal()]
    }

    /// Checks a record's fields against its table schema.
    pub fn validate_record(&self, record: &FilingRecord) -> Result<(), CorpusError> {
        match (record.is_amendment, &record.amends) {
            (true, None) => {
                return Err(CorpusError::Invariant {
                    record_id: record.record_id.clone(),
                    reason: "amendment without target".into(),
                })
            }
            (false, Some(_)) => {
                return Err(CorpusError::Invariant {
                    record_id: record.record_id.clone(),
                    reason: "amends set on a non-amendment".into(),
                })
            }
            _ => {}
        }
        let schema = self.table(&record.table_id).ok_or_else(|| CorpusError::UnknownTable {
            table_id: record.table_id.clone(),
        })?;
        if schema.filing_type != record.filing_type {
            return Err(CorpusError::Invariant {
                record_id: record.record_id.clone(),
                reason: format!(
                    "table `{}` belongs to {}, not {}",
                    schema.table_id, schema.filing_type, record.filing_type
                ),
            });
        }
        for (name, value) in &record.fields {
            let spec = schema.field(name).ok_or_else(|| CorpusError::Schema {
                table_id: schema.table_id.clone(),
                field: name.clone(),
                reason: "unknown field".into(),
            })?;
            if !value_matches_kind(value, spec.kind) {
                return Err(CorpusError::Schema {
                    table_id: schema.table_id.clone(),
                    field: name.clone(),
                    reason: format!("value {value} is not of kind {:?}", spec.kind),
                });
            }
        }
        Ok(())
    }
}

/// Null is admissible for every kind.
pub fn value_matches_kind(value: &Value, kind: FieldKind) -> bool {
    match (value, kind) {
        (Value::Null, _) => true,
        (Value::Number(n), FieldKind::Number) => n.as_f64().is_some_and(f64::is_finite),
        (Value::String(_), FieldKind::Text) => true,
        (Value::String(s), FieldKind::Date) => NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok(),
        (Value::String(s), FieldKind::Identifier) => {
            !s.is_empty() && !s.chars().any(char::is_whitespace)
        }
        (Value::Array(_), FieldKind::List) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn builtin_registry_invariants() {
        let reg = SchemaRegistry::builtin();
        assert_eq!(reg.profiles().len(), 6);
        for ft in FilingType::ALL {
            let tables: Vec<_> = reg.tables_for(ft).map(|t| t.table_id.clone()).collect();
            assert!(!tables.is_empty());
            assert_eq!(reg.profile(ft).table_ids, tables);
        }
        assert_eq!(reg.tables_for(FilingType::ThirteenF).count(), 1);
        assert_eq!(reg.tables_for(FilingType::Ncsr).count(), 3);
    }

    #[test]
    fn rejects_duplicate_tables() {
        let reg = SchemaRegistry::builtin();
        let mut tables = reg.tables().to_vec();
        tables.push(tables[0].clone());
        let err = SchemaRegistry::new("x".into(), tables, reg.profiles().to_vec()).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn kinds() {
        assert!(value_matches_kind(&json!(1.5), FieldKind::Number));
        assert!(!value_matches_kind(&json!("1.5"), FieldKind::Number));
        assert!(value_matches_kind(&json!("2024-03-31"), FieldKind::Date));
        assert!(!value_matches_kind(&json!("2024-13-31"), FieldKind::Date));
        assert!(!value_matches_kind(&json!("has space"), FieldKind::Identifier));
        assert!(value_matches_kind(&json!(["a"]), FieldKind::List));
        assert!(value_matches_kind(&Value::Null, FieldKind::Date));
    }
}
