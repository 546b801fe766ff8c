use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{argmax, MlpParams, MlpSpec};
use crate::error::{Error, Result};
use crate::fracfeat::{FeatureSpec, FeatureVector, Normalizer};
use crate::signalgen::{HierLabel, NUM_INVERTERS, NUM_SWITCHES};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Two-level classifier interface over normalized feature vectors.
pub trait HierClassifier {
    /// Stage-1 class probabilities (Normal, Inv1..Inv4).
    fn stage1_probs(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Stage-2 switch probabilities for `inverter` in 1..=4.
    fn stage2_probs(&self, inverter: usize, x: &[f64]) -> Result<Vec<f64>>;
}

/// Stage-1 argmax; stage 2 runs only when a faulty inverter is predicted.
pub fn predict_hier<C: HierClassifier + ?Sized>(model: &C, x: &[f64]) -> Result<HierLabel> {
    let inverter = argmax(&model.stage1_probs(x)?);
    if inverter == 0 {
        return Ok(HierLabel::Normal);
    }
    let switch = argmax(&model.stage2_probs(inverter, x)?);
    HierLabel::from_stages(inverter, Some(switch))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierModel {
    pub format_version: u32,
    pub feature: FeatureSpec,
    pub normalizer: Normalizer,
    pub stage1: MlpParams,
    /// One switch-isolation network per inverter, index 0 = inverter 1.
    pub stage2: Vec<MlpParams>,
}

impl HierModel {
    pub fn init(feature: FeatureSpec, normalizer: Normalizer, seed: u64) -> Result<Self> {
        let dim = feature.dim();
        let stage1 = MlpParams::init(MlpSpec::stage1(dim), crate::seed::mix(seed, &[0]))?;
        let stage2 = (1..=NUM_INVERTERS as u64)
            .map(|i| MlpParams::init(MlpSpec::stage2(dim), crate::seed::mix(seed, &[i])))
            .collect::<Result<Vec<_>>>()?;
        let model = Self { format_version: MODEL_FORMAT_VERSION, feature, normalizer, stage1, stage2 };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.feature.dim();
        if self.normalizer.dim() != dim {
            return Err(Error::Shape { expected: dim, got: self.normalizer.dim() });
        }
        if self.stage2.len() != NUM_INVERTERS {
            return Err(Error::Shape { expected: NUM_INVERTERS, got: self.stage2.len() });
        }
        self.stage1.validate()?;
        if self.stage1.input_dim() != dim || self.stage1.num_classes() != 1 + NUM_INVERTERS {
            return Err(Error::Input("stage-1 network shape does not match the feature spec".into()));
        }
        for net in &self.stage2 {
            net.validate()?;
            if net.input_dim() != dim || net.num_classes() != NUM_SWITCHES {
                return Err(Error::Input("stage-2 network shape does not match the feature spec".into()));
            }
        }
        Ok(())
    }

    pub fn normalize(&self, raw: &FeatureVector) -> Result<FeatureVector> {
        self.normalizer.apply(raw)
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<HierLabel> {
        predict_hier(self, x.as_slice())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: HierModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl HierClassifier for HierModel {
    fn stage1_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.stage1.forward(x)
    }

    fn stage2_probs(&self, inverter: usize, x: &[f64]) -> Result<Vec<f64>> {
        let net = inverter
            .checked_sub(1)
            .and_then(|i| self.stage2.get(i))
            .ok_or_else(|| Error::Input(format!("no stage-2 network for inverter {inverter}")))?;
        net.forward(x)
    }
}
