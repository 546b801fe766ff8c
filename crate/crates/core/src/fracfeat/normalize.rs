use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-9;

/// Per-dimension z-score statistics fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub fitted: bool,
}

pub fn fit_normalizer(vectors: &[FeatureVector]) -> Result<Normalizer> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Input("cannot fit a normalizer on an empty set".into()))?;
    let dim = first.dim();
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::Shape { expected: dim, got: v.dim() });
        }
        for (m, x) in mean.iter_mut().zip(&v.0) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(&v.0).zip(&mean) {
            *s += (x - m).powi(2);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
    Ok(Normalizer { mean, std, fitted: true })
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.check(v)?;
        Ok(FeatureVector(
            v.0.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect(),
        ))
    }

    pub fn invert(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.check(v)?;
        Ok(FeatureVector(
            v.0.iter().zip(&self.mean).zip(&self.std).map(|((z, m), s)| z * s + m).collect(),
        ))
    }

    fn check(&self, v: &FeatureVector) -> Result<()> {
        if !self.fitted {
            return Err(Error::Input("normalizer has not been fitted".into()));
        }
        if v.dim() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), got: v.dim() });
        }
        Ok(())
    }
}

pub fn apply_normalizer(nz: &Normalizer, v: &FeatureVector) -> Result<FeatureVector> {
    nz.apply(v)
}
