use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;

use super::{IndexError, IndexScope};
use crate::scalar::{squared_l2, Scalar};

/// Leading bytes of every index snapshot.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RGIDX\x00\x01\x00";

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor<T> {
    pub record_id: String,
    /// Squared Euclidean distance.
    pub distance: T,
}

/// Exact nearest-neighbor index: vectors stored contiguously, searched by a
/// full scan under squared L2 with ties broken by ascending record id.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatIndex<T> {
    scope: IndexScope,
    dim: usize,
    fingerprint: String,
    ids: Vec<String>,
    data: Vec<T>,
    positions: HashMap<String, usize>,
}

struct Candidate<'a, T> {
    distance: T,
    id: &'a str,
}

impl<T: Scalar> PartialEq for Candidate<'_, T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Candidate<'_, T> {}

impl<T: Scalar> PartialOrd for Candidate<'_, T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Candidate<'_, T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // vectors are finite, so distances are never NaN
        self.distance
            .partial_cmp(&other.distance)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.id.cmp(other.id))
    }
}

impl<T: Scalar> FlatIndex<T> {
    pub fn new(scope: IndexScope, dim: usize, fingerprint: impl Into<String>) -> Self {
        FlatIndex {
            scope,
            dim,
            fingerprint: fingerprint.into(),
            ids: Vec::new(),
            data: Vec::new(),
            positions: HashMap::new(),
        }
    }

    pub fn push(&mut self, record_id: impl Into<String>, vector: &[T]) -> Result<(), IndexError> {
        if vector.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(IndexError::NonFinite);
        }
        let id = record_id.into();
        if self.positions.contains_key(&id) {
            return Err(IndexError::DuplicateId(id));
        }
        self.positions.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn scope(&self) -> &IndexScope {
        &self.scope
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, record_id: &str) -> bool {
        self.positions.contains_key(record_id)
    }

    pub fn vector(&self, record_id: &str) -> Option<&[T]> {
        self.positions.get(record_id).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// The `min(k, len)` nearest entries, nearest first.
    pub fn knn(&self, query: &[T], k: usize) -> Result<Vec<Neighbor<T>>, IndexError> {
        if query.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: query.len() });
        }
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        let k = k.min(self.ids.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        // bounded max-heap holding the k best candidates seen so far
        let mut heap: BinaryHeap<Candidate<'_, T>> = BinaryHeap::with_capacity(k + 1);
        for (i, id) in self.ids.iter().enumerate() {
            let c = Candidate { distance: squared_l2(self.row(i), query), id };
            if heap.len() < k {
                heap.push(c);
            } else if c < *heap.peek().unwrap() {
                heap.pop();
                heap.push(c);
            }
        }
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor { record_id: c.id.to_string(), distance: c.distance })
            .collect())
    }

    /// Runs [`FlatIndex::knn`] for many queries in parallel; output order
    /// follows input order.
    pub fn knn_batch(
        &self,
        queries: &[Vec<T>],
        k: usize,
    ) -> Result<Vec<Vec<Neighbor<T>>>, IndexError> {
        queries.par_iter().map(|q| self.knn(q, k)).collect()
    }

    /// Appends all entries of `other`; scopes may differ (used to assemble
    /// agent and global indexes from table indexes).
    pub fn extend_from(&mut self, other: &FlatIndex<T>) -> Result<(), IndexError> {
        if other.dim != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        for (i, id) in other.ids.iter().enumerate() {
            self.push(id.clone(), other.row(i))?;
        }
        Ok(())
    }

    /// Snapshot layout, all integers little-endian:
    /// magic, scalar width (u8), scope (u32 length + utf-8), dim (u32),
    /// count (u64), fingerprint (u32 length + utf-8), `count * dim` scalars,
    /// then `count` record ids (u32 length + utf-8 each).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.data.len() * T::WIDTH + self.ids.len() * 16);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.push(T::WIDTH as u8);
        put_str(&mut out, &self.scope.to_string());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        put_str(&mut out, &self.fingerprint);
        for v in &self.data {
            v.write_le(&mut out);
        }
        for id in &self.ids {
            put_str(&mut out, id);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(SNAPSHOT_MAGIC.len())? != SNAPSHOT_MAGIC {
            return Err(IndexError::Snapshot("bad magic".into()));
        }
        let width = r.take(1)?[0] as usize;
        if width != T::WIDTH {
            return Err(IndexError::Snapshot(format!(
                "scalar width {width} does not match requested width {}",
                T::WIDTH
            )));
        }
        let scope: IndexScope = r.string()?.parse()?;
        let dim = r.u32()? as usize;
        let count = r.u64()? as usize;
        let fingerprint = r.string()?;
        let n_values = count
            .checked_mul(dim)
            .ok_or_else(|| IndexError::Snapshot("size overflow".into()))?;
        let raw = r.take(n_values.checked_mul(width).ok_or_else(|| {
            IndexError::Snapshot("size overflow".into())
        })?)?;
        let data: Vec<T> = raw.chunks_exact(width).map(T::read_le).collect();
        let mut index = FlatIndex::new(scope, dim, fingerprint);
        for i in 0..count {
            let id = r.string()?;
            index.push(id, &data[i * dim..(i + 1) * dim])?;
        }
        if r.pos != bytes.len() {
            return Err(IndexError::Snapshot("trailing bytes".into()));
        }
        Ok(index)
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<(), IndexError> {
        out.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self, IndexError> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| IndexError::Snapshot("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| IndexError::Snapshot("invalid utf-8".into()))
    }
}
