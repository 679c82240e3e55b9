use super::IngestError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self { values: vec![0.0; dimension] }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Scales to unit L2 norm (computed in f64). Zero vectors stay zero.
    pub fn normalized(values: &[f64]) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self::zeros(values.len());
        }
        Self { values: values.iter().map(|v| (v / norm) as f32).collect() }
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-6
    }
}

/// Cosine similarity accumulated in f64; 0 when either side is a zero vector.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Sequential cosine filter: a frame is kept when its similarity to the
/// last *kept* frame drops below `threshold`. Frame 0 is always kept.
pub fn select_keyframes(embeddings: &[EmbeddingVector], threshold: f64) -> Result<Vec<usize>, IngestError> {
    let first = embeddings.first().ok_or(IngestError::EmptyInput)?;
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(IngestError::InvalidParameter(format!("keyframe threshold {threshold} outside [-1, 1]")));
    }
    let dim = first.dimension();
    if let Some((index, e)) = embeddings.iter().enumerate().find(|(_, e)| e.dimension() != dim) {
        return Err(IngestError::DimensionMismatch { expected: dim, found: e.dimension(), index });
    }
    let mut kept = vec![0];
    let mut anchor = first;
    for (i, e) in embeddings.iter().enumerate().skip(1) {
        if cosine_similarity(e, anchor) < threshold {
            kept.push(i);
            anchor = e;
        }
    }
    Ok(kept)
}
