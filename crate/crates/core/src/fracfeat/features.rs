use serde::{Deserialize, Serialize};

use super::operators::{FracConfig, FracOperators};
use crate::error::{config_err, Error, Result};
use crate::signalgen::{Window, CHANNEL_NAMES, NUM_CHANNELS};

pub const NUM_FRAC_CHANNELS: usize = 6;
pub const FRAC_CHANNEL_NAMES: [&str; NUM_FRAC_CHANNELS] =
    ["caputo_v", "caputo_p", "caputo_q", "gl_v", "gl_p", "gl_q"];
pub const STAT_NAMES: [&str; NUM_STATS] = ["mean", "std", "min", "max", "rms", "masd"];
pub const NUM_STATS: usize = 6;
pub const DEFAULT_WARMUP: usize = 100;

/// Caputo(V,P,Q) followed by GL(V,P,Q).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureChannels {
    pub channels: [Vec<f64>; NUM_FRAC_CHANNELS],
}

impl FeatureChannels {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.channels.iter().map(Vec::as_slice).collect()
    }
}

/// Fixed-length classifier input: six statistics per channel, channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn build_feature_channels(w: &Window, ops: &FracOperators) -> Result<FeatureChannels> {
    if w.len() < 2 {
        return Err(Error::Input("window shorter than two samples".into()));
    }
    let [v, p, q] = w.channels();
    let channels = [
        ops.caputo(v)?,
        ops.caputo(p)?,
        ops.caputo(q)?,
        ops.gl(v)?,
        ops.gl(p)?,
        ops.gl(q)?,
    ];
    if channels.iter().any(|c| c.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite("feature channels"));
    }
    Ok(FeatureChannels { channels })
}

/// mean, population std, min, max, RMS and mean absolute successive difference.
pub fn channel_stats(x: &[f64]) -> [f64; NUM_STATS] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let masd = if x.len() > 1 {
        x.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    [mean, var.sqrt(), min, max, rms, masd]
}

/// Statistics over samples `[warmup, len)` of each series, channel-major.
pub fn summarize_series(series: &[&[f64]], warmup: usize) -> Result<FeatureVector> {
    let mut out = Vec::with_capacity(series.len() * NUM_STATS);
    for s in series {
        if warmup >= s.len() {
            return config_err(format!("warmup {warmup} must be below window length {}", s.len()));
        }
        out.extend(channel_stats(&s[warmup..]));
    }
    Ok(FeatureVector(out))
}

pub fn summarize(fc: &FeatureChannels, warmup: usize) -> Result<FeatureVector> {
    summarize_series(&fc.as_slices(), warmup)
}

/// Which representation feeds the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Statistics of the six fractional-derivative channels (36 dims).
    Fractional,
    /// Statistics of the raw V, P, Q channels (18 dims).
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub alpha: f64,
    pub beta: f64,
    pub memory_len: usize,
    pub warmup: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        let f = FracConfig::default();
        Self {
            kind: FeatureKind::Fractional,
            alpha: f.alpha,
            beta: f.beta,
            memory_len: f.memory_len,
            warmup: DEFAULT_WARMUP,
        }
    }
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        NUM_STATS
            * match self.kind {
                FeatureKind::Fractional => NUM_FRAC_CHANNELS,
                FeatureKind::Raw => NUM_CHANNELS,
            }
    }

    pub fn names(&self) -> Vec<String> {
        let channels: &[&str] = match self.kind {
            FeatureKind::Fractional => &FRAC_CHANNEL_NAMES,
            FeatureKind::Raw => &CHANNEL_NAMES,
        };
        channels
            .iter()
            .flat_map(|c| STAT_NAMES.iter().map(move |s| format!("{c}_{s}")))
            .collect()
    }

    pub fn extractor(&self, dt: f64) -> Result<FeatureExtractor> {
        let ops = FracOperators::new(FracConfig {
            alpha: self.alpha,
            beta: self.beta,
            memory_len: self.memory_len,
            dt,
        })?;
        Ok(FeatureExtractor { spec: *self, ops })
    }
}

/// Window → FeatureVector with kernels precomputed once.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    spec: FeatureSpec,
    ops: FracOperators,
}

impl FeatureExtractor {
    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn extract(&self, w: &Window) -> Result<FeatureVector> {
        if (w.dt - self.ops.config().dt).abs() > 1e-15 {
            return Err(Error::Input(format!(
                "window dt {} differs from extractor dt {}",
                w.dt,
                self.ops.config().dt
            )));
        }
        match self.spec.kind {
            FeatureKind::Fractional => summarize(&build_feature_channels(w, &self.ops)?, self.spec.warmup),
            FeatureKind::Raw => summarize_series(&w.channels(), self.spec.warmup),
        }
    }
}

/// CSV with a `label` column followed by the named feature columns.
pub fn features_csv(names: &[String], rows: &[(usize, FeatureVector)]) -> String {
    let mut out = String::from("label");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (label, fv) in rows {
        out.push_str(&label.to_string());
        for x in &fv.0 {
            out.push(',');
            out.push_str(&format!("{x:e}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::{generate_window, GridConfig, HierLabel};

    fn quiet_normal() -> Window {
        let cfg = GridConfig { meas_noise: 0.0, load_jitter: 0.0, ..GridConfig::default() };
        generate_window(&cfg, HierLabel::Normal, 1).unwrap()
    }

    #[test]
    fn constant_channel_statistics() {
        let s = channel_stats(&[2.5; 10]);
        assert_eq!(s, [2.5, 0.0, 2.5, 2.5, 2.5, 0.0]);
        let s = channel_stats(&[-4.0; 3]);
        assert_eq!(s[4], 4.0);
    }

    #[test]
    fn hand_checked_statistics() {
        let s = channel_stats(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(s[0], 2.0);
        assert!((s[5] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s[1] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fractional_summary_has_36_dims() {
        let w = quiet_normal();
        let ex = FeatureSpec::default().extractor(w.dt).unwrap();
        let fv = ex.extract(&w).unwrap();
        assert_eq!(fv.dim(), 36);
        assert_eq!(FeatureSpec::default().names().len(), 36);
        let raw = FeatureSpec { kind: FeatureKind::Raw, ..FeatureSpec::default() };
        assert_eq!(raw.extractor(w.dt).unwrap().extract(&w).unwrap().dim(), 18);
        assert_eq!(raw.names()[0], "V_mean");
    }

    #[test]
    fn steady_normal_window_has_flat_caputo_power() {
        let w = quiet_normal();
        let ops = FracOperators::new(FracConfig::default()).unwrap();
        let fc = build_feature_channels(&w, &ops).unwrap();
        assert_eq!(fc.channels.len(), 6);
        assert!(fc.channels[1][100..].iter().all(|x| x.abs() < 1e-6));
        // GL of a constant does not vanish.
        assert!(fc.channels[4][100..].iter().all(|x| *x > 0.1));
    }

    #[test]
    fn channels_are_linear_in_the_window() {
        let cfg = GridConfig::default();
        let a = generate_window(&cfg, HierLabel::fault(2, 3).unwrap(), 1).unwrap();
        let b = generate_window(&cfg, HierLabel::fault(4, 6).unwrap(), 2).unwrap();
        let mut sum = a.clone();
        for c in 0..3 {
            for (x, y) in sum.channel_mut(c).iter_mut().zip(b.channel(c)) {
                *x += y;
            }
        }
        let ops = FracOperators::new(FracConfig::default()).unwrap();
        let (fa, fb, fs) = (
            build_feature_channels(&a, &ops).unwrap(),
            build_feature_channels(&b, &ops).unwrap(),
            build_feature_channels(&sum, &ops).unwrap(),
        );
        for k in 0..6 {
            for i in 0..fs.len() {
                assert!((fs.channels[k][i] - fa.channels[k][i] - fb.channels[k][i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn warmup_must_be_below_length() {
        let w = quiet_normal();
        let ops = FracOperators::new(FracConfig::default()).unwrap();
        let fc = build_feature_channels(&w, &ops).unwrap();
        assert!(summarize(&fc, 400).is_err());
        assert!(summarize(&fc, 399).is_ok());
    }

    #[test]
    fn extractor_rejects_mismatched_sampling() {
        let w = quiet_normal();
        let ex = FeatureSpec::default().extractor(1e-3).unwrap();
        assert!(ex.extract(&w).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let names = vec!["a_mean".to_string(), "a_std".to_string()];
        let csv = features_csv(&names, &[(3, FeatureVector(vec![1.0, 0.5]))]);
        assert_eq!(csv, "label,a_mean,a_std\n3,1e0,5e-1\n");
    }
}
