use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::buffer::ReplayBuffer;
use super::curriculum::TrainConfig;
use super::data::Sample;
use crate::attacks::AttackKind;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Clean,
    /// Current-stage attacked sample (PGD is applied to these).
    Attacked,
    /// Drawn from the replay buffer.
    Replayed,
    /// Clean sample filling a replay shortfall.
    Backfill,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub x: Vec<f64>,
    pub label: usize,
    pub kind: AttackKind,
    pub origin: Origin,
}

/// Without replacement when the pool is large enough, otherwise with.
fn draw(rng: &mut ChaCha8Rng, pool: usize, k: usize) -> Vec<usize> {
    if k <= pool {
        index::sample(rng, pool, k).into_vec()
    } else {
        (0..k).map(|_| rng.random_range(0..pool)).collect()
    }
}

/// Split of a batch into (clean, current attack, replay) slots.
pub fn batch_slots(stage: AttackKind, cfg: &TrainConfig) -> (usize, usize, usize) {
    if stage == AttackKind::None {
        return (cfg.batch, 0, 0);
    }
    let clean = (cfg.clean_frac * cfg.batch as f64).round() as usize;
    let attacked = ((cfg.current_attack_frac * cfg.batch as f64).round() as usize).min(cfg.batch - clean);
    (clean, attacked, cfg.batch - clean - attacked)
}

pub fn compose_batch(
    stage: AttackKind,
    clean: &[Sample],
    attacked: &[Sample],
    buffer: &ReplayBuffer,
    cfg: &TrainConfig,
    batch_seed: u64,
) -> Result<Vec<BatchItem>> {
    if clean.is_empty() {
        return Err(Error::Input("clean pool is empty".into()));
    }
    let (n_clean, n_attacked, n_replay) = batch_slots(stage, cfg);
    if n_attacked > 0 && attacked.is_empty() {
        return Err(Error::Input(format!("no attacked samples for stage {stage}")));
    }
    let mut rng = seed::rng_from(seed::mix(batch_seed, &[seed::tag::BATCH]));
    let from_buffer = n_replay.min(buffer.len());
    let n_backfill = n_replay - from_buffer;

    let mut batch = Vec::with_capacity(cfg.batch);
    // Clean and backfill come from one draw so they never repeat within a batch.
    let clean_idx = draw(&mut rng, clean.len(), n_clean + n_backfill);
    for (j, &i) in clean_idx.iter().enumerate() {
        let origin = if j < n_clean { Origin::Clean } else { Origin::Backfill };
        batch.push(BatchItem { x: clean[i].x.clone(), label: clean[i].label, kind: AttackKind::None, origin });
    }
    for i in draw(&mut rng, attacked.len(), n_attacked) {
        batch.push(BatchItem {
            x: attacked[i].x.clone(),
            label: attacked[i].label,
            kind: stage,
            origin: Origin::Attacked,
        });
    }
    if from_buffer > 0 {
        for i in draw(&mut rng, buffer.len(), from_buffer) {
            let item = buffer.get(i).expect("index drawn within buffer length");
            batch.push(BatchItem { x: item.x.clone(), label: item.label, kind: item.kind, origin: Origin::Replayed });
        }
    }
    Ok(batch)
}
