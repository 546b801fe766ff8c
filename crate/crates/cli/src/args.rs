//! Flag groups shared by several subcommands. Defaults match the library's.

use std::path::Path;

use clap::Args;
use fracdiag::attacks::{AttackKind, AttackSpec, PgdConfig};
use fracdiag::eval::{ExperimentConfig, SplitSpec};
use fracdiag::fracfeat::{FeatureKind, FeatureSpec};
use fracdiag::pmrat::TrainConfig;
use fracdiag::signalgen::GridConfig;

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 50.0)]
    pub fundamental_hz: f64,
    #[arg(long, default_value_t = 2000.0)]
    pub sample_hz: f64,
    #[arg(long, default_value_t = 400)]
    pub window_len: usize,
    /// Four comma-separated capacity shares summing to 1.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.35, 0.28, 0.22, 0.15])]
    pub inverter_shares: Vec<f64>,
    #[arg(long, default_value_t = 0.20)]
    pub load_jitter: f64,
    #[arg(long, default_value_t = 0.005)]
    pub meas_noise: f64,
    /// Total windows; must be a multiple of 25.
    #[arg(long, default_value_t = 5600)]
    pub n_total: usize,
}

impl GridArgs {
    pub fn config(&self) -> anyhow::Result<GridConfig> {
        let shares: [f64; 4] = self
            .inverter_shares
            .as_slice()
            .try_into()
            .map_err(|_| anyhow::anyhow!("--inverter-shares needs exactly four values"))?;
        let cfg = GridConfig {
            fundamental_hz: self.fundamental_hz,
            sample_hz: self.sample_hz,
            window_len: self.window_len,
            inverter_shares: shares,
            load_jitter: self.load_jitter,
            meas_noise: self.meas_noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Use raw V/P/Q statistics instead of fractional channels.
    #[arg(long)]
    pub raw_features: bool,
    /// Caputo order.
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    /// Grünwald-Letnikov order.
    #[arg(long, default_value_t = 0.3)]
    pub beta: f64,
    /// Short-memory length in samples.
    #[arg(long, default_value_t = 400)]
    pub memory_len: usize,
    #[arg(long, default_value_t = 100)]
    pub warmup: usize,
}

impl FeatureArgs {
    pub fn spec(&self) -> FeatureSpec {
        FeatureSpec {
            kind: if self.raw_features { FeatureKind::Raw } else { FeatureKind::Fractional },
            alpha: self.alpha,
            beta: self.beta,
            memory_len: self.memory_len,
            warmup: self.warmup,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    #[arg(long, default_value_t = 0.10)]
    pub bias_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise_frac: f64,
    #[arg(long, default_value_t = 0.20)]
    pub repl_frac: f64,
    #[arg(long, default_value_t = 50)]
    pub stale_lag: usize,
    #[arg(long, default_value_t = 0.5)]
    pub replay_frac: f64,
    /// Seed for test-time injection.
    #[arg(long, default_value_t = 0)]
    pub attack_seed: u64,
}

impl AttackArgs {
    pub fn spec(&self, kind: AttackKind) -> anyhow::Result<AttackSpec> {
        let spec = AttackSpec {
            kind,
            bias_frac: self.bias_frac,
            noise_frac: self.noise_frac,
            repl_frac: self.repl_frac,
            stale_lag: self.stale_lag,
            replay_frac: self.replay_frac,
            seed: self.attack_seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    /// Shuffle globally instead of per class.
    #[arg(long)]
    pub unstratified: bool,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

impl SplitArgs {
    pub fn spec(&self) -> SplitSpec {
        SplitSpec { train_frac: self.train_frac, stratified: !self.unstratified, seed: self.split_seed }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 20)]
    pub epochs_per_stage: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lr_decay_per_stage: f64,
    #[arg(long, default_value_t = 0.2)]
    pub ohem_frac: f64,
    #[arg(long, default_value_t = 0.5)]
    pub clean_frac: f64,
    #[arg(long, default_value_t = 0.25)]
    pub current_attack_frac: f64,
    #[arg(long, default_value_t = 0.25)]
    pub replay_frac_batch: f64,
    #[arg(long, default_value_t = 2000)]
    pub buffer_cap: usize,
    #[arg(long, default_value_t = 0.1)]
    pub pgd_epsilon: f64,
    #[arg(long, default_value_t = 10)]
    pub pgd_steps: usize,
    #[arg(long, default_value_t = 0.025)]
    pub pgd_step_size: f64,
    #[arg(long)]
    pub pgd_no_random_start: bool,
}

impl TrainArgs {
    pub fn config(&self, seed: u64) -> anyhow::Result<TrainConfig> {
        let cfg = TrainConfig {
            epochs_per_stage: self.epochs_per_stage,
            batch: self.batch,
            lr: self.lr,
            momentum: self.momentum,
            lr_decay_per_stage: self.lr_decay_per_stage,
            ohem_frac: self.ohem_frac,
            clean_frac: self.clean_frac,
            current_attack_frac: self.current_attack_frac,
            replay_frac_batch: self.replay_frac_batch,
            buffer_cap: self.buffer_cap,
            pgd: PgdConfig {
                epsilon: self.pgd_epsilon,
                steps: self.pgd_steps,
                step_size: self.pgd_step_size,
                random_start: !self.pgd_no_random_start,
            },
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything an end-to-end experiment needs except per-command I/O.
#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub feature: FeatureArgs,
    #[command(flatten)]
    pub attack: AttackArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

impl ExperimentArgs {
    pub fn config(&self, seed: u64) -> anyhow::Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            grid: self.grid.config()?,
            n_total: self.grid.n_total,
            data_seed: seed,
            split: self.split.spec(),
            feature: self.feature.spec(),
            attack: self.attack.spec(AttackKind::None)?,
            train: self.train.config(seed)?,
        })
    }
}

pub fn write_output(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}
