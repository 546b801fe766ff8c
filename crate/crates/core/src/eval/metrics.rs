use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::attacks::AttackSpec;
use crate::error::{Error, Result};
use crate::model::{argmax, predict_hier, HierClassifier, HierModel};
use crate::pmrat::extract_attacked;
use crate::signalgen::{HierLabel, Window, NUM_CHANNELS, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    /// 25-class flat accuracy.
    pub overall_acc: f64,
    /// Stage-1 (normal + four inverters) accuracy over all samples.
    pub inverter_acc: f64,
    /// Switch accuracy over fault samples whose inverter was localized correctly.
    pub switch_acc: f64,
    /// False when no fault sample was localized correctly; `switch_acc` is then 0.
    pub switch_acc_defined: bool,
    pub switch_denominator: usize,
    /// Rows are true flat labels, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    /// Stage-2 invocations that followed a stage-1 Normal decision.
    pub stage2_calls_on_normal: usize,
}

/// Wraps a classifier and records stage-2 calls made after a Normal stage-1 argmax.
struct Instrumented<'a, C: ?Sized> {
    inner: &'a C,
    last_stage1: Cell<usize>,
    stage2_on_normal: Cell<usize>,
}

impl<C: HierClassifier + ?Sized> HierClassifier for Instrumented<'_, C> {
    fn stage1_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.inner.stage1_probs(x)?;
        self.last_stage1.set(argmax(&p));
        Ok(p)
    }

    fn stage2_probs(&self, inverter: usize, x: &[f64]) -> Result<Vec<f64>> {
        if self.last_stage1.get() == 0 {
            self.stage2_on_normal.set(self.stage2_on_normal.get() + 1);
        }
        self.inner.stage2_probs(inverter, x)
    }
}

pub fn metrics_from_predictions(truth: &[HierLabel], predicted: &[HierLabel]) -> Result<Metrics> {
    if truth.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty test set".into()));
    }
    if truth.len() != predicted.len() {
        return Err(Error::Shape { expected: truth.len(), got: predicted.len() });
    }
    let mut confusion = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
    let (mut flat_ok, mut inv_ok, mut sw_ok, mut sw_den) = (0usize, 0usize, 0usize, 0usize);
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.flat_index()][p.flat_index()] += 1;
        flat_ok += usize::from(t == p);
        if t.stage1_class() == p.stage1_class() {
            inv_ok += 1;
            if t.stage2_class().is_some() {
                sw_den += 1;
                sw_ok += usize::from(t.stage2_class() == p.stage2_class());
            }
        }
    }
    let n = truth.len();
    Ok(Metrics {
        n,
        overall_acc: flat_ok as f64 / n as f64,
        inverter_acc: inv_ok as f64 / n as f64,
        switch_acc: if sw_den > 0 { sw_ok as f64 / sw_den as f64 } else { 0.0 },
        switch_acc_defined: sw_den > 0,
        switch_denominator: sw_den,
        confusion,
        stage2_calls_on_normal: 0,
    })
}

/// Metrics of `model` on already-normalized feature vectors.
pub fn evaluate_features<C: HierClassifier + ?Sized>(
    model: &C,
    xs: &[Vec<f64>],
    labels: &[HierLabel],
) -> Result<Metrics> {
    let probe = Instrumented { inner: model, last_stage1: Cell::new(0), stage2_on_normal: Cell::new(0) };
    let predicted = xs.iter().map(|x| predict_hier(&probe, x)).collect::<Result<Vec<_>>>()?;
    let mut m = metrics_from_predictions(labels, &predicted)?;
    m.stage2_calls_on_normal = probe.stage2_on_normal.get();
    Ok(m)
}

/// Attacks every test window (100 % coverage), extracts and normalizes
/// features with the model's own settings, then scores the predictions.
pub fn evaluate(
    model: &HierModel,
    test: &[Window],
    attack: &AttackSpec,
    nominal: &[f64; NUM_CHANNELS],
    archive: &[Window],
) -> Result<Metrics> {
    let first = test.first().ok_or_else(|| Error::Input("cannot evaluate on an empty test set".into()))?;
    let extractor = model.feature.extractor(first.dt)?;
    let raw = extract_attacked(test, &extractor, attack, nominal, archive)?;
    let xs = raw
        .iter()
        .map(|v| Ok(model.normalize(v)?.0))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<HierLabel> = test.iter().map(|w| w.label).collect();
    evaluate_features(model, &xs, &labels)
}

/// One row per scenario.
pub fn metrics_csv(rows: &[(String, Metrics)]) -> String {
    let mut out = String::from(
        "# switch_acc denominator: fault samples whose inverter was localized correctly\n\
         scenario,n,overall_acc,inverter_acc,switch_acc,switch_acc_defined,stage2_calls_on_normal\n",
    );
    for (name, m) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            name, m.n, m.overall_acc, m.inverter_acc, m.switch_acc, m.switch_acc_defined, m.stage2_calls_on_normal
        ));
    }
    out
}
