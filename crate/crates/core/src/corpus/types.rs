use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// The six regulatory filing types, one expert agent each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilingType {
    ThirteenF,
    Ncsr,
    Ncen,
    Nport,
    Nmfp,
    Adv,
}

impl FilingType {
    pub const ALL: [FilingType; 6] = [
        FilingType::ThirteenF,
        FilingType::Ncsr,
        FilingType::Ncen,
        FilingType::Nport,
        FilingType::Nmfp,
        FilingType::Adv,
    ];

    /// Short display name used in prompts, reports and route ordering.
    pub fn name(self) -> &'static str {
        match self {
            FilingType::ThirteenF => "13F",
            FilingType::Ncsr => "NCSR",
            FilingType::Ncen => "NCEN",
            FilingType::Nport => "NPORT",
            FilingType::Nmfp => "NMFP",
            FilingType::Adv => "ADV",
        }
    }

    /// Position in [`FilingType::ALL`].
    pub fn ordinal(self) -> usize {
        FilingType::ALL.iter().position(|f| *f == self).unwrap()
    }

    /// Lenient parse accepting display names, serde names and dashed form names.
    pub fn parse_loose(s: &str) -> Option<FilingType> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match norm.as_str() {
            "13F" | "THIRTEENF" | "FORM13F" => Some(FilingType::ThirteenF),
            "NCSR" | "FORMNCSR" => Some(FilingType::Ncsr),
            "NCEN" | "FORMNCEN" => Some(FilingType::Ncen),
            "NPORT" | "FORMNPORT" => Some(FilingType::Nport),
            "NMFP" | "FORMNMFP" => Some(FilingType::Nmfp),
            "ADV" | "FORMADV" => Some(FilingType::Adv),
            _ => None,
        }
    }
}

impl fmt::Display for FilingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilingType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FilingType::parse_loose(s).ok_or_else(|| format!("unknown filing type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Number,
    Text,
    Date,
    Identifier,
    List,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub table_id: String,
    pub filing_type: FilingType,
    pub description: String,
    pub fields: Vec<FieldSpec>,
    pub key_fields: Vec<String>,
}

impl TableSchema {
    pub fn field(&self, name: &str) -> Option<&FieldSpec> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub filing_type: FilingType,
    pub persona: String,
    #[serde(default)]
    pub table_ids: Vec<String>,
}

/// One row of one filing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilingRecord {
    pub record_id: String,
    pub accession_id: String,
    pub filing_type: FilingType,
    pub table_id: String,
    pub filer_id: String,
    pub period: NaiveDate,
    #[serde(default)]
    pub is_amendment: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amends: Option<String>,
    #[serde(default)]
    pub fields: BTreeMap<String, Value>,
}

impl FilingRecord {
    pub fn get(&self, field: &str) -> Option<&Value> {
        self.fields.get(field).filter(|v| !v.is_null())
    }

    pub fn number(&self, field: &str) -> Option<f64> {
        self.get(field).and_then(Value::as_f64)
    }

    pub fn text(&self, field: &str) -> Option<&str> {
        self.get(field).and_then(Value::as_str)
    }

    /// Value of a record column, including the metadata columns
    /// `record_id`, `accession_id`, `filer_id` and `period`.
    pub fn column(&self, name: &str) -> Option<Value> {
        match name {
            "record_id" => Some(Value::String(self.record_id.clone())),
            "accession_id" => Some(Value::String(self.accession_id.clone())),
            "filer_id" => Some(Value::String(self.filer_id.clone())),
            "period" => Some(Value::String(self.period.to_string())),
            _ => self.get(name).cloned(),
        }
    }
}

/// Columns every retrieved row carries in addition to its schema fields.
pub const METADATA_COLUMNS: [(&str, FieldKind); 4] = [
    ("record_id", FieldKind::Identifier),
    ("accession_id", FieldKind::Identifier),
    ("filer_id", FieldKind::Identifier),
    ("period", FieldKind::Date),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filing_type_names_parse_back() {
        for ft in FilingType::ALL {
            assert_eq!(FilingType::parse_loose(ft.name()), Some(ft));
            let json = serde_json::to_string(&ft).unwrap();
            assert_eq!(serde_json::from_str::<FilingType>(&json).unwrap(), ft);
        }
        assert_eq!(serde_json::to_string(&FilingType::ThirteenF).unwrap(), "\"THIRTEEN_F\"");
        assert_eq!(FilingType::parse_loose("N-PORT"), Some(FilingType::Nport));
        assert_eq!(FilingType::parse_loose("Form 13F"), Some(FilingType::ThirteenF));
        assert_eq!(FilingType::parse_loose("banana"), None);
    }
}
