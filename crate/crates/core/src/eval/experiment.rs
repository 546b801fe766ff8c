//! End-to-end pipeline: generate, split, extract, train, evaluate.

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Metrics};
use super::split::{split, SplitSpec};
use crate::attacks::{AttackKind, AttackSpec};
use crate::error::Result;
use crate::fracfeat::{FeatureKind, FeatureSpec};
use crate::model::HierModel;
use crate::pmrat::{prepare_training_data, train_ablation, TrainConfig, TrainingData, TrainingLog, Variant};
use crate::seed;
use crate::signalgen::{generate_dataset, nominal_magnitudes, GridConfig, HierLabel, Window, NUM_CHANNELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub n_total: usize,
    pub data_seed: u64,
    pub split: SplitSpec,
    /// Fractional settings; variants that use raw features override `kind` only.
    pub feature: FeatureSpec,
    /// Attack strengths. `seed` drives test-time injection.
    pub attack: AttackSpec,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            n_total: 5600,
            data_seed: 0,
            split: SplitSpec::default(),
            feature: FeatureSpec::default(),
            attack: AttackSpec::default(),
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Same config with every seed derived from one master seed.
    pub fn seeded(mut self, master: u64) -> Self {
        self.data_seed = master;
        self.split.seed = seed::mix(master, &[seed::tag::SPLIT]);
        self.train.seed = master;
        self.attack.seed = seed::mix(master, &[seed::tag::EVAL]);
        self
    }
}

/// Windows after the train/test split, plus what attacks need.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<Window>,
    pub test: Vec<Window>,
    /// Normal-condition training windows, the source of replayed segments.
    pub archive: Vec<Window>,
    pub nominal: [f64; NUM_CHANNELS],
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let ds = generate_dataset(&cfg.grid, cfg.n_total, cfg.data_seed)?;
    prepare_windows(&cfg.grid, ds.windows, &cfg.split)
}

pub fn prepare_windows(grid: &GridConfig, windows: Vec<Window>, spec: &SplitSpec) -> Result<Prepared> {
    let (train, test) = split(&windows, spec)?;
    let archive = train.iter().filter(|w| w.label == HierLabel::Normal).cloned().collect();
    Ok(Prepared { train, test, archive, nominal: nominal_magnitudes(grid) })
}

pub fn feature_for(variant: Variant, base: &FeatureSpec) -> FeatureSpec {
    FeatureSpec { kind: variant.feature_kind(), ..*base }
}

/// Training-time attacks get their own seed stream, disjoint from evaluation.
pub fn training_data(cfg: &ExperimentConfig, p: &Prepared, kind: FeatureKind) -> Result<TrainingData> {
    let attack = AttackSpec { seed: seed::mix(cfg.train.seed, &[seed::tag::ATTACK]), ..cfg.attack.clone() };
    let feature = FeatureSpec { kind, ..cfg.feature };
    prepare_training_data(&p.train, &p.test, feature, &attack, &p.nominal, &p.archive)
}

pub fn train_variant(cfg: &ExperimentConfig, p: &Prepared, variant: Variant) -> Result<(HierModel, TrainingLog)> {
    let data = training_data(cfg, p, variant.feature_kind())?;
    train_ablation(variant, &data, &cfg.train)
}

/// Clean and the four attacked test scenarios, in curriculum order.
pub fn evaluate_scenarios(
    model: &HierModel,
    p: &Prepared,
    attack: &AttackSpec,
) -> Result<Vec<(AttackKind, Metrics)>> {
    AttackKind::CURRICULUM
        .iter()
        .map(|&kind| {
            let spec = AttackSpec { kind, ..attack.clone() };
            Ok((kind, evaluate(model, &p.test, &spec, &p.nominal, &p.archive)?))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub variant: Variant,
    pub model: HierModel,
    pub log: TrainingLog,
    pub scenarios: Vec<(AttackKind, Metrics)>,
}

impl RunResult {
    pub fn accuracy(&self, kind: AttackKind) -> f64 {
        self.scenarios.iter().find(|(k, _)| *k == kind).map_or(f64::NAN, |(_, m)| m.overall_acc)
    }

    pub fn metrics_rows(&self) -> Vec<(String, Metrics)> {
        self.scenarios.iter().map(|(k, m)| (k.name().to_string(), m.clone())).collect()
    }
}

pub fn run_variant(cfg: &ExperimentConfig, p: &Prepared, variant: Variant) -> Result<RunResult> {
    let (model, log) = train_variant(cfg, p, variant)?;
    let scenarios = evaluate_scenarios(&model, p, &cfg.attack)?;
    Ok(RunResult { variant, model, log, scenarios })
}
