//! Example embeddings, labels and difficulty signals; the warm-up/pool split
//! and the teacher-query budget ledger.
//!
//! Binary embedding layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CBED"
//! 4       4     u32 version (= 1)
//! 8       8     u64 n (rows)
//! 16      8     u64 d (columns)
//! 24      4*n*d f32 values, row-major
//! ```
//!
//! Ids, labels and difficulties live in a JSONL sidecar, one object per row in
//! row order: `{"id": "...", "label": 3, "difficulty": 0.7}`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const MAGIC: &[u8; 4] = b"CBED";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Smallest probability the difficulty score resolves; anything below is clamped.
pub const PROB_FLOOR: f64 = 1e-12;
/// `-ln(PROB_FLOOR)`.
pub const CLAMP_MAX: f64 = 27.631_021_115_928_547;

/// Row-major matrix of example representations with stable ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} ids x {} dims needs {} values, got {}",
                ids.len(),
                dim,
                ids.len() * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim, col: pos % dim });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate id {id:?}")));
            }
        }
        Ok(Self { ids, data, dim, index })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::invalid(format!("dimension mismatch at row {i}: expected {dim}, got {}", r.len())));
        }
        Self::new(ids, rows.concat(), dim)
    }

    /// Builds a set with ids `"0"`, `"1"`, ... (zero-padded so lexicographic order matches row order).
    pub fn with_sequential_ids(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(sequential_ids(rows.len()), rows)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Resolves ids to row indices, failing on the first unknown id.
    pub fn indices_of<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<usize>> {
        ids.into_iter()
            .map(|id| self.index_of(id).ok_or_else(|| Error::invalid(format!("unknown id {id:?}"))))
            .collect()
    }

    /// New set holding the given rows in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let ids: Vec<String> = rows.iter().map(|&i| self.ids[i].clone()).collect();
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        let index = ids.iter().cloned().zip(0..).collect();
        Self { ids, data, dim: self.dim, index }
    }

    /// Rows reordered by ascending id.
    pub fn sorted_by_id(&self) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        self.subset(&order)
    }

    /// Euclidean distance between two rows.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        euclidean(self.row(a), self.row(b))
    }
}

/// Zero-padded `"0".."n-1"` so lexicographic and numeric order agree.
pub fn sequential_ids(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("{i:0width$}")).collect()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One line of the metadata sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub label: usize,
    #[serde(rename = "difficulty")]
    pub raw_difficulty: Option<f64>,
}

impl ExampleRecord {
    pub fn validate(&self, class_count: Option<usize>) -> Result<()> {
        if let Some(k) = class_count {
            if self.label >= k {
                return Err(Error::invalid(format!("label {} of {:?} outside [0, {k})", self.label, self.id)));
            }
        }
        match self.raw_difficulty {
            Some(d) if !(d.is_finite() && d >= 0.0) => {
                Err(Error::invalid(format!("difficulty of {:?} must be finite and non-negative, got {d}", self.id)))
            }
            _ => Ok(()),
        }
    }
}

/// Embeddings paired with their metadata, row-aligned.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub embeddings: EmbeddingSet,
    pub records: Vec<ExampleRecord>,
}

/// Decodes the binary matrix, returning `(n, d, values)`.
pub fn decode_matrix(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("malformed header: {} bytes, need {HEADER_LEN}", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("malformed header: bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("malformed header: unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let (n, d) = match (usize::try_from(n), usize::try_from(d)) {
        (Ok(n), Ok(d)) if d > 0 => (n, d),
        _ => return Err(Error::Format(format!("malformed header: n={n}, d={d}"))),
    };
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format("malformed header: size overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: expected {expected} bytes for {n}x{d}, got {}",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "dimension mismatch: {} trailing bytes after {n}x{d} payload",
            payload.len() - expected
        )));
    }
    let values: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: pos / d, col: pos % d });
    }
    Ok((n, d, values))
}

pub fn encode_matrix(n: usize, d: usize, values: &[f32]) -> Vec<u8> {
    debug_assert_eq!(values.len(), n * d);
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_metadata(text: &str) -> Result<Vec<ExampleRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str::<ExampleRecord>(line)
                .map_err(|e| Error::Format(format!("metadata line {}: {e}", i + 1)))
        })
        .collect()
}

/// Loads embeddings plus the metadata sidecar and validates them against each other.
pub fn load_embeddings(embeddings: &Path, metadata: &Path) -> Result<Dataset> {
    let bytes = fs::read(embeddings).map_err(|e| Error::io(embeddings, e))?;
    let (n, d, values) = decode_matrix(&bytes)?;
    let text = fs::read_to_string(metadata).map_err(|e| Error::io(metadata, e))?;
    let records = parse_metadata(&text)?;
    if records.len() != n {
        return Err(Error::Format(format!(
            "dimension mismatch: {n} embedding rows but {} metadata lines",
            records.len()
        )));
    }
    for r in &records {
        r.validate(None)?;
    }
    let ids = records.iter().map(|r| r.id.clone()).collect();
    let data = values.into_iter().map(f64::from).collect();
    let embeddings = EmbeddingSet::new(ids, data, d)?;
    Ok(Dataset { embeddings, records })
}

/// Writes an embedding file and its sidecar. Values are stored as f32.
pub fn save_embeddings(
    set: &EmbeddingSet,
    records: &[ExampleRecord],
    embeddings: &Path,
    metadata: &Path,
) -> Result<()> {
    if records.len() != set.len() {
        return Err(Error::invalid("records and embeddings differ in length"));
    }
    let values: Vec<f32> = set.as_slice().iter().map(|&v| v as f32).collect();
    fs::write(embeddings, encode_matrix(set.len(), set.dim(), &values)).map_err(|e| Error::io(embeddings, e))?;
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(metadata, e))?;
    }
    fs::write(metadata, out).map_err(|e| Error::io(metadata, e))
}

/// Loss-based difficulty `-ln p[y_star]`, clamped at [`CLAMP_MAX`].
pub fn difficulty_from_distribution(p: &[f64], y_star: usize) -> Result<f64> {
    if y_star >= p.len() {
        return Err(Error::invalid(format!("class index {y_star} out of range for {} classes", p.len())));
    }
    if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::invalid("probability entries must lie in [0, 1]"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("probabilities sum to {total}, not a distribution")));
    }
    let q = p[y_star];
    if q < PROB_FLOOR {
        return Ok(CLAMP_MAX);
    }
    Ok((-q.ln()).max(0.0))
}

/// Disjoint warm-up / selection-pool split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolPartition {
    pub warmup_ids: BTreeSet<String>,
    pub pool_ids: BTreeSet<String>,
}

impl PoolPartition {
    /// Pool rows of `set`, in the set's row order.
    pub fn pool_rows(&self, set: &EmbeddingSet) -> Vec<usize> {
        (0..set.len()).filter(|&i| self.pool_ids.contains(set.id(i))).collect()
    }

    pub fn warmup_rows(&self, set: &EmbeddingSet) -> Vec<usize> {
        (0..set.len()).filter(|&i| self.warmup_ids.contains(set.id(i))).collect()
    }
}

/// Uniformly samples `round(fraction * n)` warm-up ids (capped at `n - 1` so the pool is never empty).
pub fn split_warmup(ids: &[String], fraction: f64, seed: u64) -> Result<PoolPartition> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("warm-up fraction must lie in (0, 1), got {fraction}")));
    }
    let n = ids.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 examples to split, got {n}")));
    }
    let unique: HashSet<&String> = ids.iter().collect();
    if unique.len() != n {
        return Err(Error::invalid("ids must be unique"));
    }
    let k = ((fraction * n as f64).round() as usize).min(n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, 0x5741_524d);
    let (chosen, _) = order.partial_shuffle(&mut rng, k);
    let warm: HashSet<usize> = chosen.iter().copied().collect();
    let mut partition = PoolPartition { warmup_ids: BTreeSet::new(), pool_ids: BTreeSet::new() };
    for (i, id) in ids.iter().enumerate() {
        if warm.contains(&i) {
            partition.warmup_ids.insert(id.clone());
        } else {
            partition.pool_ids.insert(id.clone());
        }
    }
    Ok(partition)
}

/// Running count of teacher queries against the budget `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    budget: usize,
    consumed: usize,
}

impl BudgetLedger {
    pub fn new(budget: usize) -> Self {
        Self { budget, consumed: 0 }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.consumed
    }

    pub fn consume(&mut self, units: usize) -> Result<()> {
        if units > self.remaining() {
            return Err(Error::invalid(format!(
                "budget exceeded: {} consumed of {}, requested {units} more",
                self.consumed, self.budget
            )));
        }
        self.consumed += units;
        Ok(())
    }
}
