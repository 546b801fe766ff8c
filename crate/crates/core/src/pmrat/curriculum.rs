//! Five-stage progressive adversarial training of the hierarchical model.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::batch::{batch_slots, compose_batch, BatchItem, Origin};
use super::buffer::{ReplayBuffer, ReplayItem};
use super::data::{Sample, TrainingData};
use super::ohem::{hard_count, ohem_select, stage_lambda, total_loss};
use crate::attacks::{pgd_attack, AttackKind, PgdConfig};
use crate::error::{config_err, Error, Result};
use crate::fracfeat::FeatureKind;
use crate::model::{predict_hier, sgd_step, Gradients, HierModel, MlpParams};
use crate::seed;
use crate::signalgen::{HierLabel, NUM_CLASSES, NUM_INVERTERS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs_per_stage: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub lr_decay_per_stage: f64,
    pub ohem_frac: f64,
    pub clean_frac: f64,
    pub current_attack_frac: f64,
    pub replay_frac_batch: f64,
    pub buffer_cap: usize,
    pub pgd: PgdConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_per_stage: 20,
            batch: 64,
            lr: 0.01,
            momentum: 0.9,
            lr_decay_per_stage: 0.5,
            ohem_frac: 0.2,
            clean_frac: 0.5,
            current_attack_frac: 0.25,
            replay_frac_batch: 0.25,
            buffer_cap: 2000,
            pgd: PgdConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_stage == 0 || self.batch == 0 {
            return config_err("epochs_per_stage and batch must be positive");
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.momentum) || !(self.lr_decay_per_stage > 0.0) {
            return config_err("lr and lr_decay_per_stage must be positive, momentum in [0, 1)");
        }
        if !(self.ohem_frac > 0.0 && self.ohem_frac <= 1.0) {
            return config_err("ohem_frac must lie in (0, 1]");
        }
        let fracs = [self.clean_frac, self.current_attack_frac, self.replay_frac_batch];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return config_err("batch fractions must lie in [0, 1]");
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return config_err("clean_frac + current_attack_frac + replay_frac_batch must equal 1");
        }
        self.pgd.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoOhem,
    NoFracFeat,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoOhem, Variant::NoFracFeat];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoOhem => "no_ohem",
            Variant::NoFracFeat => "no_frac_feat",
        }
    }

    pub fn feature_kind(&self) -> FeatureKind {
        match self {
            Variant::NoFracFeat => FeatureKind::Raw,
            _ => FeatureKind::Fractional,
        }
    }

    fn hard_selection(&self) -> HardSelection {
        match self {
            Variant::NoOhem => HardSelection::Uniform,
            _ => HardSelection::Ohem,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "no_ohem" => Ok(Variant::NoOhem),
            "no_frac_feat" | "no_frac" => Ok(Variant::NoFracFeat),
            other => Err(Error::Input(format!("unknown variant '{other}'"))),
        }
    }
}

/// How the hard subset of each batch is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardSelection {
    /// Largest per-sample losses.
    Ohem,
    /// Same count, chosen uniformly at random.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub stage: AttackKind,
    pub epoch: usize,
    /// Mean stage-1 attack-aware loss over the epoch's batches.
    pub loss: f64,
    /// Flat 25-class accuracy on the clean validation set.
    pub val_acc: f64,
    pub lambda: f64,
    pub buffer_size: usize,
    pub hard_selection: HardSelection,
    /// Training samples seen this epoch per attack kind, curriculum order.
    pub kind_counts: [usize; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub variant: Variant,
    pub entries: Vec<LogEntry>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,epoch,loss,val_acc,lambda,buffer_size\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.stage, e.epoch, e.loss, e.val_acc, e.lambda, e.buffer_size
            ));
        }
        out
    }

    pub fn lambdas_by_stage(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let mut last = None;
        for e in &self.entries {
            if last != Some(e.stage) {
                out.push(e.lambda);
                last = Some(e.stage);
            }
        }
        out
    }
}

struct Head<'a> {
    net: &'a mut MlpParams,
    velocity: &'a mut Gradients,
}

/// One attack-aware SGD step on `items`; returns the batch loss and the hard subset.
#[allow(clippy::too_many_arguments)]
fn train_head(
    head: Head<'_>,
    xs: &[&[f64]],
    ys: &[usize],
    selection: HardSelection,
    frac: f64,
    lambda: f64,
    lr: f64,
    momentum: f64,
    select_seed: u64,
) -> Result<(f64, Vec<usize>)> {
    let n = xs.len();
    let mut grads = Gradients::zeros_like(head.net);
    let mut losses = Vec::with_capacity(n);
    for (x, &y) in xs.iter().zip(ys) {
        losses.push(head.net.accumulate(x, y, 1.0 / n as f64, Some(&mut grads))?.0);
    }
    let hard = match selection {
        HardSelection::Ohem => ohem_select(&losses, frac)?,
        HardSelection::Uniform => {
            let mut rng = seed::rng_from(select_seed);
            let mut idx = index::sample(&mut rng, n, hard_count(n, frac)).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    if lambda > 0.0 && !hard.is_empty() {
        let w = lambda / hard.len() as f64;
        for &h in &hard {
            head.net.accumulate(xs[h], ys[h], w, Some(&mut grads))?;
        }
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("training gradients"));
    }
    let hard_losses: Vec<f64> = hard.iter().map(|&h| losses[h]).collect();
    let loss = total_loss(&losses, &hard_losses, lambda);
    *head.net = sgd_step(head.net, &grads, lr, momentum, head.velocity);
    Ok((loss, hard))
}

fn flat_accuracy(model: &HierModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for s in samples {
        if predict_hier(model, &s.x)?.flat_index() == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

fn kind_slot(kind: AttackKind) -> usize {
    AttackKind::CURRICULUM.iter().position(|&k| k == kind).expect("curriculum covers all kinds")
}

fn check_classes(samples: &[Sample]) -> Result<()> {
    let mut seen = [false; NUM_CLASSES];
    for s in samples {
        if s.label >= NUM_CLASSES {
            return Err(Error::Label(format!("flat label {} out of range", s.label)));
        }
        seen[s.label] = true;
    }
    match seen.iter().position(|&s| !s) {
        Some(missing) => Err(Error::MissingClass(missing)),
        None => Ok(()),
    }
}

/// Full method: OHEM hard-example weighting and memory replay.
pub fn run_curriculum(data: &TrainingData, cfg: &TrainConfig) -> Result<(HierModel, TrainingLog)> {
    train_ablation(Variant::Full, data, cfg)
}

/// Trains one method variant. `data` must carry the variant's feature kind.
pub fn train_ablation(
    variant: Variant,
    data: &TrainingData,
    cfg: &TrainConfig,
) -> Result<(HierModel, TrainingLog)> {
    cfg.validate()?;
    if data.feature.kind != variant.feature_kind() {
        return Err(Error::Config(format!(
            "variant {} expects {:?} features, data has {:?}",
            variant.name(),
            variant.feature_kind(),
            data.feature.kind
        )));
    }
    check_classes(&data.clean)?;
    for kind in AttackKind::ATTACKS {
        if data.attacked.get(&kind).is_none_or(|v| v.is_empty()) {
            return Err(Error::Input(format!("no attacked training pool for {kind}")));
        }
    }

    let selection = variant.hard_selection();
    let mut model = HierModel::init(data.feature, data.normalizer.clone(), seed::mix(cfg.seed, &[seed::tag::INIT]))?;
    let mut vel1 = Gradients::zeros_like(&model.stage1);
    let mut vel2: Vec<Gradients> = model.stage2.iter().map(Gradients::zeros_like).collect();
    let mut buffer = ReplayBuffer::new(cfg.buffer_cap);
    let mut log = TrainingLog { variant, entries: Vec::new() };

    for (stage_idx, &stage) in AttackKind::CURRICULUM.iter().enumerate() {
        let lambda = stage_lambda(stage);
        let lr = cfg.lr * cfg.lr_decay_per_stage.powi(stage_idx as i32);
        let attacked_pool: &[Sample] = data.attacked.get(&stage).map(Vec::as_slice).unwrap_or(&[]);
        // An epoch is one pass over the clean pool at this stage's clean share.
        let clean_slots = batch_slots(stage, cfg).0.max(1);
        let batches_per_epoch = data.clean.len().div_ceil(clean_slots);

        for epoch in 0..cfg.epochs_per_stage {
            let mut loss_sum = 0.0;
            let mut kind_counts = [0usize; 5];
            for b in 0..batches_per_epoch {
                let bseed = seed::mix(cfg.seed, &[seed::tag::BATCH, stage_idx as u64, epoch as u64, b as u64]);
                let mut batch = compose_batch(stage, &data.clean, attacked_pool, &buffer, cfg, bseed)?;
                for (i, item) in batch.iter_mut().enumerate() {
                    if item.origin == Origin::Attacked {
                        let stage1 = HierLabel::from_flat(item.label)?.stage1_class();
                        let pseed = seed::mix(bseed, &[seed::tag::PGD, i as u64]);
                        let adv = pgd_attack(&model.stage1, &crate::fracfeat::FeatureVector(std::mem::take(&mut item.x)), stage1, &cfg.pgd, pseed)?;
                        item.x = adv.0;
                    }
                }
                for item in &batch {
                    kind_counts[kind_slot(item.kind)] += 1;
                }
                loss_sum += train_stage1(&mut model, &mut vel1, &batch, &mut buffer, selection, lambda, lr, cfg, bseed)?;
                train_stage2(&mut model, &mut vel2, &batch, selection, lambda, lr, cfg, bseed)?;
            }
            log.entries.push(LogEntry {
                stage,
                epoch,
                loss: loss_sum / batches_per_epoch as f64,
                val_acc: flat_accuracy(&model, &data.val)?,
                lambda,
                buffer_size: buffer.len(),
                hard_selection: selection,
                kind_counts,
            });
        }
    }
    Ok((model, log))
}

#[allow(clippy::too_many_arguments)]
fn train_stage1(
    model: &mut HierModel,
    velocity: &mut Gradients,
    batch: &[BatchItem],
    buffer: &mut ReplayBuffer,
    selection: HardSelection,
    lambda: f64,
    lr: f64,
    cfg: &TrainConfig,
    bseed: u64,
) -> Result<f64> {
    let xs: Vec<&[f64]> = batch.iter().map(|b| b.x.as_slice()).collect();
    let ys = batch
        .iter()
        .map(|b| Ok(HierLabel::from_flat(b.label)?.stage1_class()))
        .collect::<Result<Vec<_>>>()?;
    let (loss, hard) = train_head(
        Head { net: &mut model.stage1, velocity },
        &xs,
        &ys,
        selection,
        cfg.ohem_frac,
        lambda,
        lr,
        cfg.momentum,
        seed::mix(bseed, &[0]),
    )?;
    // Every hard sample is remembered, whatever its origin; hard clean
    // samples then replay alongside attacked history.
    for &h in &hard {
        let item = &batch[h];
        buffer.push(ReplayItem { x: item.x.clone(), label: item.label, kind: item.kind });
    }
    Ok(loss)
}

#[allow(clippy::too_many_arguments)]
fn train_stage2(
    model: &mut HierModel,
    velocities: &mut [Gradients],
    batch: &[BatchItem],
    selection: HardSelection,
    lambda: f64,
    lr: f64,
    cfg: &TrainConfig,
    bseed: u64,
) -> Result<()> {
    let labels = batch
        .iter()
        .map(|b| HierLabel::from_flat(b.label))
        .collect::<Result<Vec<_>>>()?;
    for inverter in 1..=NUM_INVERTERS {
        let (xs, ys): (Vec<&[f64]>, Vec<usize>) = batch
            .iter()
            .zip(&labels)
            .filter(|(_, l)| l.stage1_class() == inverter)
            .map(|(b, l)| (b.x.as_slice(), l.stage2_class().expect("fault label has a switch")))
            .unzip();
        if xs.is_empty() {
            continue;
        }
        train_head(
            Head { net: &mut model.stage2[inverter - 1], velocity: &mut velocities[inverter - 1] },
            &xs,
            &ys,
            selection,
            cfg.ohem_frac,
            lambda,
            lr,
            cfg.momentum,
            seed::mix(bseed, &[inverter as u64]),
        )?;
    }
    Ok(())
}
