use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{prepare, training_data, ExperimentConfig};
use crate::error::{config_err, Result};
use crate::fracfeat::FeatureKind;
use crate::pmrat::{train_ablation, Variant};
use crate::seed;

pub const DEFAULT_ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_LENGTHS: [usize; 4] = [100, 200, 400, 800];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub memory_len: usize,
    pub val_acc: f64,
}

/// Unique (α, L) cells in first-seen order, L-major.
pub fn sweep_cells(alphas: &[f64], lengths: &[usize], beta: f64) -> Result<Vec<(f64, usize)>> {
    if alphas.is_empty() || lengths.is_empty() {
        return config_err("sweep needs at least one alpha and one length");
    }
    if !(beta > 0.0 && beta < 1.0) {
        return config_err(format!("beta {beta} outside (0, 1)"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return config_err(format!("alpha {a} outside (0, 1)"));
    }
    if lengths.iter().any(|&l| l < 8) {
        return config_err("sweep lengths must be at least 8 samples");
    }
    let mut cells: Vec<(f64, usize)> = Vec::new();
    for &l in lengths {
        for &a in alphas {
            if !cells.iter().any(|&(ca, cl)| cl == l && ca.to_bits() == a.to_bits()) {
                cells.push((a, l));
            }
        }
    }
    Ok(cells)
}

/// Clean validation accuracy of the full method over an (α, L) grid. The
/// window length and memory both equal L, and the warm-up is L/4 so that
/// short windows keep most of their samples. β stays at `base.feature.beta`.
pub fn sweep(alphas: &[f64], lengths: &[usize], base: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let cells = sweep_cells(alphas, lengths, base.feature.beta)?;
    let mut lens: Vec<usize> = cells.iter().map(|c| c.1).collect();
    lens.dedup();
    let prepared = lens
        .iter()
        .map(|&l| {
            let mut cfg = base.clone();
            cfg.grid.window_len = l;
            Ok((l, prepare(&cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;

    cells
        .par_iter()
        .map(|&(alpha, l)| {
            let mut cfg = base.clone();
            cfg.grid.window_len = l;
            cfg.feature.alpha = alpha;
            cfg.feature.memory_len = l;
            cfg.feature.warmup = l / 4;
            cfg.train.seed = seed::mix(base.train.seed, &[alpha.to_bits(), l as u64]);
            let p = &prepared.iter().find(|(pl, _)| *pl == l).expect("prepared length").1;
            let data = training_data(&cfg, p, FeatureKind::Fractional)?;
            let (_, log) = train_ablation(Variant::Full, &data, &cfg.train)?;
            let val_acc = log.entries.last().map_or(0.0, |e| e.val_acc);
            Ok(SweepRow { alpha, memory_len: l, val_acc })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha,L,val_acc\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.4}\n", r.alpha, r.memory_len, r.val_acc));
    }
    out
}
