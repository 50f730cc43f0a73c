//! Ranked-retrieval metrics over any hashable id type.

use std::collections::HashSet;
use std::hash::Hash;

use super::IndexError;

fn hits<I: Eq + Hash>(retrieved: &[I], relevant: &HashSet<I>, k: usize) -> usize {
    let mut seen = HashSet::new();
    retrieved
        .iter()
        .take(k)
        .filter(|id| relevant.contains(*id) && seen.insert(*id))
        .count()
}

/// Fraction of the top `k` ranks holding relevant items. Ranks beyond the end
/// of `retrieved` count as misses.
pub fn precision_at<I: Eq + Hash>(retrieved: &[I], relevant: &HashSet<I>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits(retrieved, relevant, k) as f64 / k as f64
}

/// Fraction of the relevant items found in the top `k` ranks.
pub fn recall_at<I: Eq + Hash>(
    retrieved: &[I],
    relevant: &HashSet<I>,
    k: usize,
) -> Result<f64, IndexError> {
    if relevant.is_empty() {
        return Err(IndexError::EmptyRelevant);
    }
    Ok(hits(retrieved, relevant, k) as f64 / relevant.len() as f64)
}

/// Precision at rank R = |relevant|.
pub fn r_precision<I: Eq + Hash>(retrieved: &[I], relevant: &HashSet<I>) -> Result<f64, IndexError> {
    if relevant.is_empty() {
        return Err(IndexError::EmptyRelevant);
    }
    Ok(precision_at(retrieved, relevant, relevant.len()))
}
