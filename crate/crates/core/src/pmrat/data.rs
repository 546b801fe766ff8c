//! Feature pools consumed by the training loop: clean and per-attack
//! normalized feature vectors for every training window, plus a clean
//! validation set.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::attacks::{apply_attack, AttackKind, AttackSpec};
use crate::error::{Error, Result};
use crate::fracfeat::{fit_normalizer, FeatureExtractor, FeatureSpec, FeatureVector, Normalizer};
use crate::signalgen::{Window, NUM_CHANNELS};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Normalized feature vector.
    pub x: Vec<f64>,
    /// Flat 25-class label.
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingData {
    pub feature: FeatureSpec,
    pub normalizer: Normalizer,
    pub clean: Vec<Sample>,
    /// Attacked copy of every clean training sample, same order.
    pub attacked: BTreeMap<AttackKind, Vec<Sample>>,
    pub val: Vec<Sample>,
}

pub fn extract_all(windows: &[Window], extractor: &FeatureExtractor) -> Result<Vec<FeatureVector>> {
    windows.par_iter().map(|w| extractor.extract(w)).collect()
}

/// Applies `attack` (with a per-window seed) to every window, then extracts features.
pub fn extract_attacked(
    windows: &[Window],
    extractor: &FeatureExtractor,
    attack: &AttackSpec,
    nominal: &[f64; NUM_CHANNELS],
    archive: &[Window],
) -> Result<Vec<FeatureVector>> {
    attack.validate()?;
    windows
        .par_iter()
        .map(|w| {
            let attacked = apply_attack(w, &attack.for_window(w.seed), nominal, archive)?;
            extractor.extract(&attacked)
        })
        .collect()
}

fn to_samples(nz: &Normalizer, vs: &[FeatureVector], windows: &[Window]) -> Result<Vec<Sample>> {
    vs.iter()
        .zip(windows)
        .map(|(v, w)| Ok(Sample { x: nz.apply(v)?.0, label: w.label.flat_index() }))
        .collect()
}

pub fn prepare_training_data(
    train: &[Window],
    val: &[Window],
    feature: FeatureSpec,
    attack: &AttackSpec,
    nominal: &[f64; NUM_CHANNELS],
    archive: &[Window],
) -> Result<TrainingData> {
    let first = train.first().ok_or_else(|| Error::Input("empty training split".into()))?;
    let extractor = feature.extractor(first.dt)?;
    let raw = extract_all(train, &extractor)?;
    let mut attacked_raw = Vec::new();
    for kind in AttackKind::ATTACKS {
        let spec = AttackSpec { kind, ..attack.clone() };
        attacked_raw.push((kind, extract_attacked(train, &extractor, &spec, nominal, archive)?));
    }

    // Fit on the whole training pool. Clean-only statistics put attacked
    // vectors hundreds of standard deviations out (the clean V channel
    // barely varies), where tanh units saturate.
    let pool: Vec<FeatureVector> =
        raw.iter().chain(attacked_raw.iter().flat_map(|(_, vs)| vs)).cloned().collect();
    let normalizer = fit_normalizer(&pool)?;
    let clean = to_samples(&normalizer, &raw, train)?;
    let mut attacked = BTreeMap::new();
    for (kind, vs) in &attacked_raw {
        attacked.insert(*kind, to_samples(&normalizer, vs, train)?);
    }
    let val = to_samples(&normalizer, &extract_all(val, &extractor)?, val)?;
    Ok(TrainingData { feature, normalizer, clean, attacked, val })
}
