use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{prepare, run_variant, ExperimentConfig, RunResult};
use crate::attacks::AttackKind;
use crate::error::{config_err, Result};
use crate::pmrat::Variant;

/// Overall accuracy per variant and scenario, one entry per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    /// `acc[v][s][k]`: variant v (in `Variant::ALL` order), seed s, scenario k (curriculum order).
    pub acc: Vec<Vec<[f64; 5]>>,
}

impl AblationReport {
    pub fn mean(&self, variant: Variant, kind: AttackKind) -> f64 {
        let v = Variant::ALL.iter().position(|&x| x == variant).expect("known variant");
        let k = kind as usize;
        let runs = &self.acc[v];
        runs.iter().map(|r| r[k]).sum::<f64>() / runs.len() as f64
    }

    /// 3×5 grid of seed-averaged accuracies.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant");
        for k in AttackKind::CURRICULUM {
            out.push(',');
            out.push_str(k.name());
        }
        out.push('\n');
        for v in Variant::ALL {
            out.push_str(v.name());
            for k in AttackKind::CURRICULUM {
                out.push_str(&format!(",{:.4}", self.mean(v, k)));
            }
            out.push('\n');
        }
        out
    }
}

/// Trains and evaluates all three variants for each master seed.
/// Each (seed, variant) cell runs independently, so they go in parallel.
pub fn run_ablation(base: &ExperimentConfig, seeds: &[u64]) -> Result<(AblationReport, Vec<RunResult>)> {
    if seeds.is_empty() {
        return config_err("ablation needs at least one seed");
    }
    let prepared = seeds
        .iter()
        .map(|&s| {
            let cfg = base.clone().seeded(s);
            Ok((cfg.clone(), prepare(&cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, Variant)> = (0..seeds.len())
        .flat_map(|s| Variant::ALL.into_iter().map(move |v| (s, v)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(s, v)| run_variant(&prepared[s].0, &prepared[s].1, v))
        .collect::<Result<Vec<_>>>()?;

    let mut acc = vec![vec![[0.0; 5]; seeds.len()]; Variant::ALL.len()];
    for (&(s, v), run) in cells.iter().zip(&runs) {
        let vi = Variant::ALL.iter().position(|&x| x == v).expect("known variant");
        for k in AttackKind::CURRICULUM {
            acc[vi][s][k as usize] = run.accuracy(k);
        }
    }
    Ok((AblationReport { seeds: seeds.to_vec(), acc }, runs))
}
