use std::collections::BTreeMap;

use super::{Route, RoutingError, RoutingOutcome, Strategy};
use crate::corpus::FilingType;
use crate::index::{Embedder, EmbeddingVector, FlatIndex};
use crate::Scalar;

/// Nearest persona picks the agent, then the nearest table description within
/// that agent picks the table.
pub fn route_embedding<T: Scalar>(
    query: &str,
    persona_index: &FlatIndex<T>,
    table_indexes: &BTreeMap<FilingType, FlatIndex<T>>,
    embedder: &dyn Embedder,
) -> Result<RoutingOutcome, RoutingError> {
    if persona_index.len() != FilingType::ALL.len() {
        return Err(RoutingError::BadPersonaIndex(format!("{} entries", persona_index.len())));
    }
    let q = EmbeddingVector::<T>::from_f64(&embedder.embed(query)?)?;
    let nearest = persona_index.knn(q.as_slice(), 1)?;
    let id = &nearest[0].record_id;
    let agent = FilingType::parse_loose(id)
        .ok_or_else(|| RoutingError::BadPersonaIndex(format!("entry `{id}` is not an agent")))?;
    let tables = table_indexes
        .get(&agent)
        .filter(|t| !t.is_empty())
        .ok_or(RoutingError::MissingTableIndex(agent))?;
    let table = tables.knn(q.as_slice(), 1)?.remove(0).record_id;
    Ok(RoutingOutcome::routed(Strategy::EmbeddingRag, vec![Route::new(agent, table)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SchemaRegistry;
    use crate::index::{persona_index, persona_text, table_index, HashFeatureEmbedder};

    #[test]
    fn verbatim_persona_selects_agent() {
        let reg = SchemaRegistry::builtin();
        let e = HashFeatureEmbedder::new(64).unwrap();
        let personas = persona_index::<f32>(&reg, &e).unwrap();
        let tables: BTreeMap<_, _> = FilingType::ALL
            .iter()
            .map(|&ft| (ft, table_index::<f32>(&reg, ft, &e).unwrap()))
            .collect();
        for p in reg.profiles() {
            let out = route_embedding(&persona_text(p), &personas, &tables, &e).unwrap();
            assert_eq!(out.predicted[0].agent, p.filing_type);
        }
        let mut partial = tables.clone();
        partial.remove(&FilingType::Adv);
        let adv = persona_text(reg.profile(FilingType::Adv));
        assert!(matches!(
            route_embedding(&adv, &personas, &partial, &e),
            Err(RoutingError::MissingTableIndex(FilingType::Adv))
        ));
    }
}
