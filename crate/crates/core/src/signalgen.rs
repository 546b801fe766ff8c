//! Parametric surrogate for a four-inverter microgrid observed at the point
//! of common coupling. Produces per-unit V, P, Q windows for the normal
//! state and the 24 single-IGBT open-circuit faults.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::seed;

pub const NUM_INVERTERS: usize = 4;
pub const NUM_SWITCHES: usize = 6;
pub const NUM_CLASSES: usize = 1 + NUM_INVERTERS * NUM_SWITCHES;
pub const NUM_CHANNELS: usize = 3;
pub const CHANNEL_NAMES: [&str; NUM_CHANNELS] = ["V", "P", "Q"];

/// Per-unit operating point of the healthy plant at unit load.
const V_BASE: f64 = 1.0;
const P_BASE: f64 = 1.0;
const Q_BASE: f64 = 0.3;

// Open-circuit signature coefficients, all scaled by the faulty inverter's share.
const P_SAG: f64 = 0.15;
const P_RIPPLE: f64 = 0.25;
const Q_RIPPLE: f64 = 0.10;
const V_RIPPLE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub fundamental_hz: f64,
    pub sample_hz: f64,
    pub window_len: usize,
    pub inverter_shares: [f64; NUM_INVERTERS],
    pub load_jitter: f64,
    pub meas_noise: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            fundamental_hz: 50.0,
            sample_hz: 2000.0,
            window_len: 400,
            inverter_shares: [0.35, 0.28, 0.22, 0.15],
            load_jitter: 0.20,
            meas_noise: 0.005,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inverter_shares.iter().any(|&s| !(s > 0.0)) {
            return config_err("inverter shares must all be positive");
        }
        let total: f64 = self.inverter_shares.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return config_err(format!("inverter shares sum to {total}, expected 1"));
        }
        if self.window_len < 2 {
            return config_err("window_len must be at least 2");
        }
        if !(self.fundamental_hz > 0.0) || !(self.sample_hz > 2.0 * self.fundamental_hz) {
            return config_err("sample_hz must exceed twice the fundamental frequency");
        }
        if !(0.0..1.0).contains(&self.load_jitter) {
            return config_err("load_jitter must lie in [0, 1)");
        }
        if !(self.meas_noise >= 0.0) || !self.meas_noise.is_finite() {
            return config_err("meas_noise must be a finite non-negative fraction");
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_hz
    }
}

/// Two-level diagnosis label: which inverter (if any) and which of its six
/// bridge switches is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HierLabel {
    Normal,
    /// `inverter` in 1..=4, `switch` in 1..=6.
    Fault { inverter: u8, switch: u8 },
}

impl HierLabel {
    pub fn fault(inverter: u8, switch: u8) -> Result<Self> {
        let label = HierLabel::Fault { inverter, switch };
        label.validate()?;
        Ok(label)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HierLabel::Normal => Ok(()),
            HierLabel::Fault { inverter, switch } => {
                if !(1..=NUM_INVERTERS as u8).contains(&inverter) {
                    return Err(Error::Label(format!("inverter {inverter} outside 1..=4")));
                }
                if !(1..=NUM_SWITCHES as u8).contains(&switch) {
                    return Err(Error::Label(format!("switch {switch} outside 1..=6")));
                }
                Ok(())
            }
        }
    }

    /// 0 for Normal, `1 + 6·(inverter−1) + (switch−1)` otherwise.
    pub fn flat_index(&self) -> usize {
        match *self {
            HierLabel::Normal => 0,
            HierLabel::Fault { inverter, switch } => {
                1 + NUM_SWITCHES * (inverter as usize - 1) + (switch as usize - 1)
            }
        }
    }

    pub fn from_flat(index: usize) -> Result<Self> {
        match index {
            0 => Ok(HierLabel::Normal),
            i if i < NUM_CLASSES => {
                let k = i - 1;
                Ok(HierLabel::Fault {
                    inverter: (k / NUM_SWITCHES + 1) as u8,
                    switch: (k % NUM_SWITCHES + 1) as u8,
                })
            }
            i => Err(Error::Label(format!("flat index {i} outside 0..25"))),
        }
    }

    /// Stage-1 class: 0 = Normal, 1..=4 = faulty inverter.
    pub fn stage1_class(&self) -> usize {
        match *self {
            HierLabel::Normal => 0,
            HierLabel::Fault { inverter, .. } => inverter as usize,
        }
    }

    /// Stage-2 class (0-based switch), present only for faults.
    pub fn stage2_class(&self) -> Option<usize> {
        match *self {
            HierLabel::Normal => None,
            HierLabel::Fault { switch, .. } => Some(switch as usize - 1),
        }
    }

    pub fn from_stages(stage1: usize, stage2: Option<usize>) -> Result<Self> {
        match (stage1, stage2) {
            (0, None) => Ok(HierLabel::Normal),
            (inv @ 1..=NUM_INVERTERS, Some(sw)) if sw < NUM_SWITCHES => {
                HierLabel::fault(inv as u8, sw as u8 + 1)
            }
            _ => Err(Error::Label(format!(
                "stage-1 class {stage1} incompatible with stage-2 {stage2:?}"
            ))),
        }
    }
}

/// One measurement window at the PCC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub dt: f64,
    pub label: HierLabel,
    pub seed: u64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.v,
            1 => &self.p,
            2 => &self.q,
            _ => panic!("channel index {c} out of range"),
        }
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut Vec<f64> {
        match c {
            0 => &mut self.v,
            1 => &mut self.p,
            2 => &mut self.q,
            _ => panic!("channel index {c} out of range"),
        }
    }

    pub fn channels(&self) -> [&[f64]; NUM_CHANNELS] {
        [&self.v, &self.p, &self.q]
    }

    pub fn is_finite(&self) -> bool {
        self.channels().iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// Per-unit base magnitudes of (V, P, Q); attacks expressed as a fraction
/// of nominal are scaled by these.
pub fn nominal_magnitudes(_cfg: &GridConfig) -> [f64; NUM_CHANNELS] {
    [V_BASE, P_BASE, Q_BASE]
}

pub fn generate_window(cfg: &GridConfig, label: HierLabel, seed: u64) -> Result<Window> {
    cfg.validate()?;
    label.validate()?;
    let mut rng = seed::rng_from(seed);
    let n = cfg.window_len;
    let dt = cfg.dt();

    let load = if cfg.load_jitter > 0.0 {
        rng.random_range((1.0 - cfg.load_jitter)..=(1.0 + cfg.load_jitter))
    } else {
        1.0
    };

    let mut v = vec![V_BASE; n];
    let mut p = vec![P_BASE * load; n];
    let mut q = vec![Q_BASE * load; n];

    if let HierLabel::Fault { inverter, switch } = label {
        let share = cfg.inverter_shares[inverter as usize - 1];
        let leg = ((switch - 1) % 3) as f64;
        let phi = leg * 2.0 * PI / 3.0;
        let polarity = if switch % 2 == 1 { 1.0 } else { -1.0 };
        let omega = 2.0 * PI * cfg.fundamental_hz;
        let sag = P_SAG * share * load;
        for i in 0..n {
            let t = i as f64 * dt;
            let fund = (omega * t + phi).sin();
            p[i] += -sag + P_RIPPLE * share * (polarity * fund).max(0.0);
            q[i] += Q_RIPPLE * share * fund;
            v[i] += V_RIPPLE * share * (2.0 * omega * t + phi).sin();
        }
    }

    if cfg.meas_noise > 0.0 {
        let normal = Normal::new(0.0, cfg.meas_noise)
            .map_err(|e| Error::Config(format!("measurement noise: {e}")))?;
        for series in [&mut v, &mut p, &mut q] {
            for x in series.iter_mut() {
                *x += normal.sample(&mut rng);
            }
        }
    }

    Ok(Window { v, p, q, dt, label, seed })
}

/// Byte layout of the binary payload accompanying a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadLayout {
    pub dtype: String,
    pub order: String,
    pub channels: Vec<String>,
    pub window_len: usize,
    pub num_windows: usize,
    pub bytes: usize,
}

impl PayloadLayout {
    pub fn new(window_len: usize, num_windows: usize) -> Self {
        Self {
            dtype: "f64-le".into(),
            order: "window,channel,sample".into(),
            channels: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            window_len,
            num_windows,
            bytes: 8 * NUM_CHANNELS * window_len * num_windows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub config: GridConfig,
    pub base_seed: u64,
    pub n_total: usize,
    pub class_counts: Vec<usize>,
    pub seed_hash: String,
    /// Flat label index per window, in payload order.
    pub labels: Vec<usize>,
    pub seeds: Vec<u64>,
    pub layout: PayloadLayout,
    /// Payload file name relative to the manifest; set when written to disk.
    #[serde(default)]
    pub payload_file: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub windows: Vec<Window>,
    pub manifest: DatasetManifest,
}

pub const SEED_HASH_DESCRIPTION: &str =
    "splitmix64 fold: h=sm(base); h=sm(h^sm(class)); h=sm(h^sm(replica))";

/// Balanced dataset, `n_total / 25` windows per class, class-major order.
pub fn generate_dataset(cfg: &GridConfig, n_total: usize, base_seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    if n_total == 0 || !n_total.is_multiple_of(NUM_CLASSES) {
        return config_err(format!(
            "n_total = {n_total} is not a positive multiple of {NUM_CLASSES}"
        ));
    }
    let per_class = n_total / NUM_CLASSES;
    let jobs: Vec<(usize, usize)> = (0..NUM_CLASSES)
        .flat_map(|c| (0..per_class).map(move |r| (c, r)))
        .collect();

    let windows = jobs
        .par_iter()
        .map(|&(c, r)| {
            let label = HierLabel::from_flat(c)?;
            generate_window(cfg, label, seed::window_seed(base_seed, c, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let seeds: Vec<u64> = windows.iter().map(|w| w.seed).collect();
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::Input("duplicate window seed in dataset".into()));
    }

    let manifest = DatasetManifest {
        format_version: 1,
        config: cfg.clone(),
        base_seed,
        n_total,
        class_counts: vec![per_class; NUM_CLASSES],
        seed_hash: SEED_HASH_DESCRIPTION.into(),
        labels: windows.iter().map(|w| w.label.flat_index()).collect(),
        seeds,
        layout: PayloadLayout::new(cfg.window_len, n_total),
        payload_file: String::new(),
    };
    Ok(Dataset { windows, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> GridConfig {
        GridConfig { meas_noise: 0.0, load_jitter: 0.0, ..GridConfig::default() }
    }

    #[test]
    fn steady_normal_window_is_constant() {
        let w = generate_window(&quiet(), HierLabel::Normal, 99).unwrap();
        assert!(w.p.iter().all(|&x| x == 1.0));
        assert!(w.q.iter().all(|&x| x == 0.3));
        assert_eq!(w.len(), 400);
        assert_eq!(w.dt, 5e-4);
    }

    #[test]
    fn window_generation_is_bit_identical() {
        let cfg = GridConfig::default();
        let label = HierLabel::fault(1, 1).unwrap();
        let a = generate_window(&cfg, label, 7).unwrap();
        let b = generate_window(&cfg, label, 7).unwrap();
        for c in 0..3 {
            let bits_a: Vec<u64> = a.channel(c).iter().map(|x| x.to_bits()).collect();
            let bits_b: Vec<u64> = b.channel(c).iter().map(|x| x.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn ripple_amplitude_scales_with_inverter_share() {
        let cfg = quiet();
        let ripple = |inv| {
            let w = generate_window(&cfg, HierLabel::fault(inv, 1).unwrap(), 3).unwrap();
            // Sample 10 sits at sin(pi/2) = 1 for switch 1; any zero-ripple sample gives the floor.
            w.p[10] - w.p[30]
        };
        let expected = cfg.inverter_shares[0] / cfg.inverter_shares[3];
        assert!((ripple(1) / ripple(4) - expected).abs() < 1e-12);
        assert!((ripple(1) - 0.25 * 0.35).abs() < 1e-12);
    }

    #[test]
    fn invalid_labels_are_rejected() {
        let cfg = GridConfig::default();
        for bad in [
            HierLabel::Fault { inverter: 0, switch: 1 },
            HierLabel::Fault { inverter: 5, switch: 1 },
            HierLabel::Fault { inverter: 2, switch: 7 },
        ] {
            assert!(matches!(generate_window(&cfg, bad, 1), Err(Error::Label(_))));
        }
        assert!(HierLabel::from_flat(25).is_err());
        assert!(HierLabel::from_stages(0, Some(1)).is_err());
        assert!(HierLabel::from_stages(2, None).is_err());
    }

    #[test]
    fn flat_index_round_trips() {
        for i in 0..NUM_CLASSES {
            let label = HierLabel::from_flat(i).unwrap();
            assert_eq!(label.flat_index(), i);
            assert_eq!(HierLabel::from_stages(label.stage1_class(), label.stage2_class()).unwrap(), label);
        }
        assert_eq!(HierLabel::fault(2, 5).unwrap().flat_index(), 11);
    }

    #[test]
    fn config_validation() {
        let mut cfg = GridConfig::default();
        cfg.inverter_shares = [0.25, 0.25, 0.25, 0.2];
        assert!(cfg.validate().is_err());
        let mut cfg = GridConfig::default();
        cfg.inverter_shares = [0.5, 0.5, 0.0, 0.0];
        assert!(cfg.validate().is_err());
        let cfg = GridConfig { window_len: 1, ..GridConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = GridConfig { sample_hz: 100.0, ..GridConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dataset_balance_and_size_checks() {
        let cfg = GridConfig::default();
        let ds = generate_dataset(&cfg, 25, 11).unwrap();
        assert_eq!(ds.windows.len(), 25);
        assert_eq!(ds.manifest.class_counts, vec![1; 25]);
        for (i, w) in ds.windows.iter().enumerate() {
            assert_eq!(w.label.flat_index(), i);
        }
        assert!(generate_dataset(&cfg, 26, 11).is_err());
        assert!(generate_dataset(&cfg, 0, 11).is_err());
    }

    #[test]
    fn full_size_dataset_is_balanced_and_deterministic() {
        let cfg = GridConfig::default();
        let a = generate_dataset(&cfg, 5600, 2024).unwrap();
        let b = generate_dataset(&cfg, 5600, 2024).unwrap();
        assert_eq!(a.manifest.class_counts, vec![224; 25]);
        assert_eq!(a, b);
        assert!(a.windows.iter().all(|w| w.is_finite()));
        // Physical sanity at defaults.
        assert!(a.windows.iter().all(|w| w.p.iter().all(|&x| x > 0.0 && x < 2.0)));
    }

    #[test]
    fn noise_free_templates_are_pairwise_separable() {
        let cfg = quiet();
        let templates: Vec<Window> = (0..NUM_CLASSES)
            .map(|c| generate_window(&cfg, HierLabel::from_flat(c).unwrap(), 0).unwrap())
            .collect();
        for i in 0..NUM_CLASSES {
            for j in (i + 1)..NUM_CLASSES {
                let max_diff = (0..3)
                    .flat_map(|c| {
                        templates[i].channel(c).iter().zip(templates[j].channel(c)).map(|(a, b)| (a - b).abs())
                    })
                    .fold(0.0, f64::max);
                assert!(max_diff > 1e-6, "classes {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn nominal_magnitudes_are_positive() {
        let nom = nominal_magnitudes(&GridConfig::default());
        assert_eq!(nom, [1.0, 1.0, 0.3]);
        assert!((0.10 * nom[0] - 0.10).abs() < 1e-15);
    }
}
