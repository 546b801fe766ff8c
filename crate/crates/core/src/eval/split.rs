use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::seed;
use crate::signalgen::{Window, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_frac: 0.8, stratified: true, seed: 0 }
    }
}

/// Deterministic train/test partition. With stratification every class keeps
/// `⌊train_frac·n_c⌋` or one more training windows, and the total is
/// `round(train_frac·N)`.
pub fn split(windows: &[Window], spec: &SplitSpec) -> Result<(Vec<Window>, Vec<Window>)> {
    if !(spec.train_frac > 0.0 && spec.train_frac < 1.0) {
        return config_err(format!("train_frac {} outside (0, 1)", spec.train_frac));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, w) in windows.iter().enumerate() {
        by_class[w.label.flat_index()].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < 2 {
            return Err(Error::Input(format!("class {c} has fewer than two windows")));
        }
    }
    let target = (spec.train_frac * windows.len() as f64).round() as usize;
    let mut in_train = vec![false; windows.len()];

    if spec.stratified {
        let mut quota: Vec<usize> = by_class
            .iter()
            .map(|m| ((spec.train_frac * m.len() as f64).floor() as usize).clamp(1.min(m.len()), m.len().saturating_sub(1)))
            .collect();
        // Hand the remainder to randomly ordered classes that can still spare a test window.
        let mut order: Vec<usize> = (0..NUM_CLASSES).filter(|&c| !by_class[c].is_empty()).collect();
        order.shuffle(&mut seed::rng_from(seed::mix(spec.seed, &[seed::tag::SPLIT])));
        let mut assigned: usize = quota.iter().sum();
        for &c in &order {
            if assigned >= target {
                break;
            }
            if quota[c] + 1 < by_class[c].len() {
                quota[c] += 1;
                assigned += 1;
            }
        }
        for (c, members) in by_class.iter().enumerate() {
            let mut members = members.clone();
            members.shuffle(&mut seed::rng_from(seed::mix(spec.seed, &[seed::tag::SPLIT, c as u64])));
            for &i in &members[..quota[c]] {
                in_train[i] = true;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..windows.len()).collect();
        all.shuffle(&mut seed::rng_from(seed::mix(spec.seed, &[seed::tag::SPLIT])));
        for &i in &all[..target] {
            in_train[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (w, t) in windows.iter().zip(in_train) {
        if t {
            train.push(w.clone());
        } else {
            test.push(w.clone());
        }
    }
    Ok((train, test))
}
