//! Cognitive distance between agent outputs: `1 - cosine` of their
//! normalized embeddings.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::AgentOutput;

/// Longest prefix (in characters) of an output that is sent for embedding.
pub const EMBEDDING_CHAR_CAP: usize = 8192;

const NORM_TOLERANCE: f64 = 1e-6;

/// First [`EMBEDDING_CHAR_CAP`] characters of `text`.
pub fn embedding_input(text: &str) -> &str {
    match text.char_indices().nth(EMBEDDING_CHAR_CAP) {
        Some((byte, _)) => &text[..byte],
        None => text,
    }
}

/// L2-normalized embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

fn l2(values: &[f64]) -> f64 {
    libm::sqrt(values.iter().map(|v| v * v).sum())
}

impl Embedding {
    /// Normalizes `values` to unit length. Vectors already within a few
    /// ulps of unit length are kept as they are, so normalizing twice is exact.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateEmbedding);
        }
        let norm = l2(&values);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateEmbedding);
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Embedding(values));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Accepts already-normalized vectors verbatim (used when reading transcripts).
impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateEmbedding);
        }
        if (l2(&values) - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(Embedding(values))
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`.
pub fn cognitive_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    if a.0 == b.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    let cos = dot / (l2(&a.0) * l2(&b.0));
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

/// Symmetric `M x M` matrix of cognitive distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_embeddings(embeddings: &[Embedding]) -> Result<Self> {
        let size = embeddings.len();
        let mut data = vec![0.0; size * size];
        for u in 0..size {
            for v in (u + 1)..size {
                let d = cognitive_distance(&embeddings[u], &embeddings[v])?;
                data[u * size + v] = d;
                data[v * size + u] = d;
            }
        }
        Ok(DistanceMatrix { size, data })
    }

    /// Builds a matrix from explicit rows, checking shape, symmetry, range
    /// and the zero diagonal.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidMatrix("not square"));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        let m = DistanceMatrix { size, data };
        for u in 0..size {
            if m.get(u, u) != 0.0 {
                return Err(Error::InvalidMatrix("non-zero diagonal"));
            }
            for v in 0..size {
                let d = m.get(u, v);
                if !(0.0..=2.0).contains(&d) {
                    return Err(Error::InvalidMatrix("entry outside [0, 2]"));
                }
                if d != m.get(v, u) {
                    return Err(Error::InvalidMatrix("not symmetric"));
                }
            }
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.size + v]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.size..(u + 1) * self.size]
    }

    /// Mean distance from `u` to every other node; 0 for a single node.
    pub fn mean_distance(&self, u: usize) -> f64 {
        if self.size < 2 {
            return 0.0;
        }
        self.row(u).iter().sum::<f64>() / (self.size - 1) as f64
    }

    /// Node with the least mean distance to its peers, lowest id on ties.
    pub fn centroid(&self) -> usize {
        let mut best = 0;
        for u in 1..self.size {
            if self.mean_distance(u) < self.mean_distance(best) {
                best = u;
            }
        }
        best
    }
}

/// Pairwise distances over one round's outputs, indexed by position.
pub fn distance_matrix(outputs: &[AgentOutput]) -> Result<DistanceMatrix> {
    if let Some(first) = outputs.first() {
        if outputs.iter().any(|o| o.round != first.round) {
            return Err(Error::MixedRounds);
        }
    }
    let embeddings: Vec<Embedding> = outputs.iter().map(|o| o.embedding.clone()).collect();
    DistanceMatrix::from_embeddings(&embeddings)
}
