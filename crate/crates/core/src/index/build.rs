use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Embedder, EmbeddingVector, FlatIndex, IndexError, IndexScope};
use crate::corpus::{
    to_embedding_text, AgentProfile, FilingRecord, FilingType, ReconciledView, SchemaRegistry,
    TableSchema,
};
use crate::Scalar;

fn embed_all<T: Scalar>(
    texts: &[String],
    embedder: &dyn Embedder,
) -> Result<Vec<EmbeddingVector<T>>, IndexError> {
    let dim = embedder.dim();
    texts
        .par_iter()
        .map(|t| {
            let v = embedder.embed(t)?;
            if v.len() != dim {
                return Err(IndexError::DimensionMismatch { expected: dim, found: v.len() });
            }
            EmbeddingVector::from_f64(&v)
        })
        .collect()
}

fn from_records<T: Scalar>(
    records: &[&FilingRecord],
    scope: &IndexScope,
    embedder: &dyn Embedder,
) -> Result<FlatIndex<T>, IndexError> {
    if let Some(r) = records.iter().find(|r| !scope.contains(r)) {
        return Err(IndexError::ScopeMismatch {
            record_id: r.record_id.clone(),
            scope: scope.to_string(),
        });
    }
    let texts: Vec<String> = records.iter().map(|r| to_embedding_text(r)).collect();
    let vectors = embed_all::<T>(&texts, embedder)?;
    let mut index = FlatIndex::new(scope.clone(), embedder.dim(), embedder.fingerprint());
    for (r, v) in records.iter().zip(&vectors) {
        index.push(r.record_id.clone(), v.as_slice())?;
    }
    Ok(index)
}

/// Index over the records of `view` that fall inside `scope`, one entry per
/// record keyed by record id and embedded from its canonical text.
pub fn build_index<T: Scalar>(
    view: &ReconciledView,
    scope: &IndexScope,
    embedder: &dyn Embedder,
    dim: usize,
) -> Result<FlatIndex<T>, IndexError> {
    if embedder.dim() != dim {
        return Err(IndexError::DimensionMismatch { expected: dim, found: embedder.dim() });
    }
    scope.validate(view.registry())?;
    let records: Vec<&FilingRecord> = match scope {
        IndexScope::Table(t) => view.table(t).collect(),
        _ => view.records().iter().filter(|r| scope.contains(r)).collect(),
    };
    from_records(&records, scope, embedder)
}

/// Text embedded for an agent persona.
pub fn persona_text(profile: &AgentProfile) -> String {
    profile.persona.clone()
}

/// Text embedded for a table description.
pub fn table_text(schema: &TableSchema) -> String {
    let fields: Vec<&str> = schema.field_names().collect();
    format!("{} Fields: {}.", schema.description, fields.join(", "))
}

/// One entry per agent persona, keyed by the agent display name.
pub fn persona_index<T: Scalar>(
    registry: &SchemaRegistry,
    embedder: &dyn Embedder,
) -> Result<FlatIndex<T>, IndexError> {
    let texts: Vec<String> = registry.profiles().iter().map(persona_text).collect();
    let vectors = embed_all::<T>(&texts, embedder)?;
    let mut index =
        FlatIndex::new(IndexScope::Global, embedder.dim(), format!("personas/{}", embedder.fingerprint()));
    for (p, v) in registry.profiles().iter().zip(&vectors) {
        index.push(p.filing_type.name(), v.as_slice())?;
    }
    Ok(index)
}

/// One entry per table of `agent`, keyed by table id.
pub fn table_index<T: Scalar>(
    registry: &SchemaRegistry,
    agent: FilingType,
    embedder: &dyn Embedder,
) -> Result<FlatIndex<T>, IndexError> {
    let tables: Vec<&TableSchema> = registry.tables_for(agent).collect();
    let texts: Vec<String> = tables.iter().map(|t| table_text(t)).collect();
    let vectors = embed_all::<T>(&texts, embedder)?;
    let mut index = FlatIndex::new(
        IndexScope::Agent(agent),
        embedder.dim(),
        format!("tables/{}", embedder.fingerprint()),
    );
    for (t, v) in tables.iter().zip(&vectors) {
        index.push(t.table_id.clone(), v.as_slice())?;
    }
    Ok(index)
}

/// Record indexes at all three scopes over one view. Table indexes are built
/// first; agent and global indexes are their disjoint unions.
#[derive(Debug, Clone)]
pub struct ScopedIndexes<T> {
    pub tables: BTreeMap<String, FlatIndex<T>>,
    pub agents: BTreeMap<FilingType, FlatIndex<T>>,
    pub global: FlatIndex<T>,
}

impl<T: Scalar> ScopedIndexes<T> {
    /// Table-scope indexes only, one per registry table (possibly empty).
    pub fn build_tables(
        view: &ReconciledView,
        embedder: &dyn Embedder,
    ) -> Result<BTreeMap<String, FlatIndex<T>>, IndexError> {
        view.registry()
            .tables()
            .iter()
            .map(|t| {
                let scope = IndexScope::Table(t.table_id.clone());
                Ok((t.table_id.clone(), build_index(view, &scope, embedder, embedder.dim())?))
            })
            .collect()
    }

    pub fn build(view: &ReconciledView, embedder: &dyn Embedder) -> Result<Self, IndexError> {
        let tables = Self::build_tables(view, embedder)?;
        Self::from_tables(tables, view.registry(), embedder)
    }

    pub fn from_tables(
        tables: BTreeMap<String, FlatIndex<T>>,
        registry: &SchemaRegistry,
        embedder: &dyn Embedder,
    ) -> Result<Self, IndexError> {
        let dim = embedder.dim();
        let fp = embedder.fingerprint();
        let mut agents = BTreeMap::new();
        let mut global = FlatIndex::new(IndexScope::Global, dim, fp.clone());
        for ft in FilingType::ALL {
            let mut agent = FlatIndex::new(IndexScope::Agent(ft), dim, fp.clone());
            for schema in registry.tables_for(ft) {
                if let Some(t) = tables.get(&schema.table_id) {
                    agent.extend_from(t)?;
                }
            }
            global.extend_from(&agent)?;
            agents.insert(ft, agent);
        }
        Ok(ScopedIndexes { tables, agents, global })
    }

    pub fn get(&self, scope: &IndexScope) -> Option<&FlatIndex<T>> {
        match scope {
            IndexScope::Global => Some(&self.global),
            IndexScope::Agent(ft) => self.agents.get(ft),
            IndexScope::Table(t) => self.tables.get(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, reconcile, GeneratorConfig};
    use crate::index::HashFeatureEmbedder;
    use std::sync::Arc;

    fn view() -> ReconciledView {
        let store = generate_synthetic(
            &GeneratorConfig { filers: 4, records_per_table: 3, ..Default::default() },
            2,
            Arc::new(SchemaRegistry::builtin()),
        );
        reconcile(&store).unwrap()
    }

    #[test]
    fn global_is_union_of_tables() {
        let v = view();
        let e = HashFeatureEmbedder::new(16).unwrap();
        let s = ScopedIndexes::<f32>::build(&v, &e).unwrap();
        let total: usize = s.tables.values().map(FlatIndex::len).sum();
        assert_eq!(s.global.len(), total);
        assert_eq!(s.global.len(), v.len());
        let direct = build_index::<f32>(&v, &IndexScope::Global, &e, 16).unwrap();
        assert_eq!(direct.len(), s.global.len());
        for id in direct.ids() {
            assert_eq!(direct.vector(id), s.global.vector(id));
        }
        assert!(matches!(
            build_index::<f32>(&v, &IndexScope::Global, &e, 8),
            Err(IndexError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn persona_and_table_indexes() {
        let reg = SchemaRegistry::builtin();
        let e = HashFeatureEmbedder::new(32).unwrap();
        let p = persona_index::<f64>(&reg, &e).unwrap();
        assert_eq!(p.len(), 6);
        let q: Vec<f64> = e.embed(&reg.profile(FilingType::Nmfp).persona).unwrap();
        assert_eq!(p.knn(&q, 1).unwrap()[0].record_id, "NMFP");
        let t = table_index::<f64>(&reg, FilingType::Nport, &e).unwrap();
        assert_eq!(t.len(), 3);
    }
}
