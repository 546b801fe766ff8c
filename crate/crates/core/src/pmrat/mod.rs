//! Progressive memory-replay adversarial training.

mod batch;
mod buffer;
mod curriculum;
mod data;
mod ohem;

pub use batch::{batch_slots, compose_batch, BatchItem, Origin};
pub use buffer::{ReplayBuffer, ReplayItem};
pub use curriculum::{
    run_curriculum, train_ablation, HardSelection, LogEntry, TrainConfig, TrainingLog, Variant,
};
pub use data::{extract_all, extract_attacked, prepare_training_data, Sample, TrainingData};
pub use ohem::{hard_count, ohem_select, stage_lambda, total_loss};
