//! Splitting, scoring, ablations and the (α, L) sweep.

mod ablation;
mod experiment;
mod metrics;
mod split;
mod sweep;

pub use ablation::{run_ablation, AblationReport};
pub use experiment::{
    evaluate_scenarios, feature_for, prepare, prepare_windows, run_variant, train_variant, training_data,
    ExperimentConfig, Prepared, RunResult,
};
pub use metrics::{evaluate, evaluate_features, metrics_csv, metrics_from_predictions, Metrics};
pub use split::{split, SplitSpec};
pub use sweep::{sweep, sweep_cells, sweep_csv, SweepRow, DEFAULT_ALPHAS, DEFAULT_LENGTHS};
