//! PV-DBOW paragraph vectors trained with negative sampling.

mod binary;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binary::EMBEDDING_FORMAT_VERSION;
pub use train::EmbeddingModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dim: usize,
    /// Context window. Pure PV-DBOW predicts every token of a document from
    /// the document vector alone, so this is carried but not consulted.
    pub window: usize,
    pub epochs: usize,
    pub negative_samples: usize,
    pub initial_learning_rate: f32,
    pub final_learning_rate: f32,
    pub min_token_count: u64,
    pub seed: u64,
    /// Number of training threads. Anything above one trains lock-free and
    /// gives up bitwise reproducibility.
    pub workers: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 100,
            window: 5,
            epochs: 20,
            negative_samples: 5,
            initial_learning_rate: 0.025,
            final_learning_rate: 0.0001,
            min_token_count: 2,
            seed: 1,
            workers: 1,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.epochs == 0 || self.workers == 0 {
            return Err(Error::InvalidConfig(
                "embedding dim, epochs and workers must be positive".into(),
            ));
        }
        if !(self.initial_learning_rate > 0.0 && self.final_learning_rate >= 0.0) {
            return Err(Error::InvalidConfig(
                "learning rates must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A fixed-length real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        DenseVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(values: Vec<f64>) -> Self {
        DenseVector(values)
    }
}

/// Cosine of the angle between `a` and `b`; zero when either is the zero
/// vector.
pub fn cosine_similarity(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}
