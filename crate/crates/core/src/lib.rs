//! Fault diagnosis for grid-tied inverter fleets from fractional-derivative
//! features, with a hierarchical classifier hardened by progressive
//! adversarial training.
//!
//! The pipeline runs `signalgen` (synthetic V/P/Q windows) → `fracfeat`
//! (Caputo and Grünwald-Letnikov channels, summary statistics) → `model`
//! (stage-1 inverter network, per-inverter switch networks) trained by
//! `pmrat` against the measurement attacks in `attacks`, and scored by `eval`.

pub mod attacks;
pub mod dataset_io;
pub mod error;
pub mod eval;
pub mod fracfeat;
pub mod model;
pub mod pmrat;
pub mod seed;
pub mod signalgen;

pub use error::{Error, Result};
