use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::seed;
use crate::signalgen::{Window, NUM_CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    Bias,
    Noise,
    Replacement,
    Replay,
}

impl AttackKind {
    /// Curriculum order, easiest first.
    pub const CURRICULUM: [AttackKind; 5] = [
        AttackKind::None,
        AttackKind::Bias,
        AttackKind::Noise,
        AttackKind::Replacement,
        AttackKind::Replay,
    ];

    pub const ATTACKS: [AttackKind; 4] =
        [AttackKind::Bias, AttackKind::Noise, AttackKind::Replacement, AttackKind::Replay];

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Bias => "bias",
            AttackKind::Noise => "noise",
            AttackKind::Replacement => "replacement",
            AttackKind::Replay => "replay",
        }
    }

    pub fn difficulty(&self) -> f64 {
        difficulty(*self)
    }

    fn tag(&self) -> u64 {
        *self as u64 + 1
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "normal" | "clean" => Ok(AttackKind::None),
            "bias" => Ok(AttackKind::Bias),
            "noise" => Ok(AttackKind::Noise),
            "replacement" | "repl" => Ok(AttackKind::Replacement),
            "replay" => Ok(AttackKind::Replay),
            other => Err(Error::Input(format!("unknown attack kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Normalized attack difficulty.
pub fn difficulty(kind: AttackKind) -> f64 {
    match kind {
        AttackKind::None => 0.0,
        AttackKind::Bias => 0.2,
        AttackKind::Noise => 0.4,
        AttackKind::Replacement => 0.7,
        AttackKind::Replay => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// DC offset as a fraction of nominal magnitude.
    pub bias_frac: f64,
    /// Gaussian noise std as a fraction of nominal magnitude.
    pub noise_frac: f64,
    /// Fraction of samples overwritten with stale values.
    pub repl_frac: f64,
    /// Staleness of replaced samples, in samples.
    pub stale_lag: usize,
    /// Length of the replayed segment as a fraction of the window.
    pub replay_frac: f64,
    pub seed: u64,
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self {
            kind: AttackKind::None,
            bias_frac: 0.10,
            noise_frac: 0.05,
            repl_frac: 0.20,
            stale_lag: 50,
            replay_frac: 0.5,
            seed: 0,
        }
    }
}

impl AttackSpec {
    pub fn of(kind: AttackKind, seed: u64) -> Self {
        Self { kind, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("bias_frac", self.bias_frac),
            ("noise_frac", self.noise_frac),
            ("repl_frac", self.repl_frac),
            ("replay_frac", self.replay_frac),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return config_err(format!("{name} = {f} outside [0, 1]"));
            }
        }
        if self.stale_lag < 1 {
            return config_err("stale_lag must be at least 1");
        }
        Ok(())
    }

    /// Copy of this spec whose seed is specialised to one window.
    pub fn for_window(&self, window_seed: u64) -> Self {
        Self {
            seed: seed::mix(self.seed, &[seed::tag::ATTACK, self.kind.tag(), window_seed]),
            ..self.clone()
        }
    }
}

pub fn apply_bias(w: &Window, nominal: &[f64; NUM_CHANNELS], spec: &AttackSpec) -> Window {
    let mut out = w.clone();
    for (c, nom) in nominal.iter().enumerate() {
        let offset = spec.bias_frac * nom;
        out.channel_mut(c).iter_mut().for_each(|x| *x += offset);
    }
    out
}

pub fn apply_noise(w: &Window, nominal: &[f64; NUM_CHANNELS], spec: &AttackSpec) -> Result<Window> {
    let mut out = w.clone();
    if spec.noise_frac == 0.0 {
        return Ok(out);
    }
    let mut rng = seed::rng_from(spec.seed);
    for (c, nom) in nominal.iter().enumerate() {
        let normal = Normal::new(0.0, spec.noise_frac * nom)
            .map_err(|e| Error::Config(format!("noise attack: {e}")))?;
        out.channel_mut(c).iter_mut().for_each(|x| *x += normal.sample(&mut rng));
    }
    Ok(out)
}

/// Overwrites `⌊repl_frac·len⌋` distinct indices (all ≥ stale_lag) on every
/// channel with the value observed `stale_lag` samples earlier.
pub fn apply_replacement(w: &Window, spec: &AttackSpec) -> Result<Window> {
    let len = w.len();
    if spec.stale_lag >= len {
        return Err(Error::Input(format!(
            "stale_lag {} must be below window length {len}",
            spec.stale_lag
        )));
    }
    let count = (spec.repl_frac * len as f64).floor() as usize;
    let candidates = len - spec.stale_lag;
    if count > candidates {
        return Err(Error::Input(format!(
            "cannot replace {count} samples with only {candidates} stale-eligible indices"
        )));
    }
    let mut out = w.clone();
    if count == 0 {
        return Ok(out);
    }
    let mut rng = seed::rng_from(spec.seed);
    let chosen = index::sample(&mut rng, candidates, count);
    for c in 0..NUM_CHANNELS {
        let src = w.channel(c);
        let dst = out.channel_mut(c);
        for i in chosen.iter() {
            let n = i + spec.stale_lag;
            dst[n] = src[n - spec.stale_lag];
        }
    }
    Ok(out)
}

/// Overwrites one contiguous run of `⌊replay_frac·len⌋` samples with the
/// same run from a randomly chosen archived normal window.
pub fn apply_replay(w: &Window, archive: &[Window], spec: &AttackSpec) -> Result<Window> {
    if archive.is_empty() {
        return Err(Error::Input("replay attack needs a non-empty archive".into()));
    }
    let len = w.len();
    let seg = (spec.replay_frac * len as f64).floor() as usize;
    let mut out = w.clone();
    if seg == 0 {
        return Ok(out);
    }
    let mut rng = seed::rng_from(spec.seed);
    let source = &archive[rng.random_range(0..archive.len())];
    if source.len() < len {
        return Err(Error::Shape { expected: len, got: source.len() });
    }
    let offset = rng.random_range(0..=len - seg);
    for c in 0..NUM_CHANNELS {
        out.channel_mut(c)[offset..offset + seg].copy_from_slice(&source.channel(c)[offset..offset + seg]);
    }
    Ok(out)
}

/// Dispatches on `spec.kind`, using `spec.seed` as given.
pub fn apply_attack(
    w: &Window,
    spec: &AttackSpec,
    nominal: &[f64; NUM_CHANNELS],
    archive: &[Window],
) -> Result<Window> {
    match spec.kind {
        AttackKind::None => Ok(w.clone()),
        AttackKind::Bias => Ok(apply_bias(w, nominal, spec)),
        AttackKind::Noise => apply_noise(w, nominal, spec),
        AttackKind::Replacement => apply_replacement(w, spec),
        AttackKind::Replay => apply_replay(w, archive, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::{generate_window, nominal_magnitudes, GridConfig, HierLabel};

    const NOM: [f64; 3] = [1.0, 1.0, 0.3];

    fn quiet(label: HierLabel) -> Window {
        let cfg = GridConfig { meas_noise: 0.0, load_jitter: 0.0, ..GridConfig::default() };
        generate_window(&cfg, label, 5).unwrap()
    }

    fn noisy(label: HierLabel, seed: u64) -> Window {
        generate_window(&GridConfig::default(), label, seed).unwrap()
    }

    fn changed_indices(a: &Window, b: &Window) -> Vec<usize> {
        (0..a.len())
            .filter(|&i| (0..3).any(|c| a.channel(c)[i] != b.channel(c)[i]))
            .collect()
    }

    #[test]
    fn difficulty_map() {
        assert_eq!(difficulty(AttackKind::None), 0.0);
        assert_eq!(difficulty(AttackKind::Bias), 0.2);
        assert_eq!(difficulty(AttackKind::Noise), 0.4);
        assert_eq!(difficulty(AttackKind::Replacement), 0.7);
        assert_eq!(difficulty(AttackKind::Replay), 1.0);
    }

    #[test]
    fn bias_shifts_by_ten_percent_of_nominal() {
        let w = quiet(HierLabel::Normal);
        let nominal = nominal_magnitudes(&GridConfig::default());
        let spec = AttackSpec::of(AttackKind::Bias, 0);
        let out = apply_bias(&w, &nominal, &spec);
        assert!(out.p.iter().all(|&x| (x - 1.10).abs() < 1e-15));
        let twice = apply_bias(&out, &nominal, &spec);
        assert!(twice.q.iter().all(|&x| (x - (0.3 + 0.2 * 0.3)).abs() < 1e-15));
        let none = apply_bias(&w, &nominal, &AttackSpec { bias_frac: 0.0, ..spec });
        assert_eq!(none, w);
    }

    #[test]
    fn noise_std_matches_configuration() {
        let mut w = quiet(HierLabel::Normal);
        let n = 1_000_000;
        w.v = vec![1.0; n];
        w.p = vec![1.0; n];
        w.q = vec![0.3; n];
        let out = apply_noise(&w, &NOM, &AttackSpec::of(AttackKind::Noise, 17)).unwrap();
        let mean = out.p.iter().sum::<f64>() / n as f64;
        let std = (out.p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((std - 0.05).abs() < 0.001, "{std}");
        let q_mean = out.q.iter().sum::<f64>() / n as f64;
        let q_std = (out.q.iter().map(|x| (x - q_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((q_std - 0.015).abs() < 0.0005, "{q_std}");
    }

    #[test]
    fn noise_is_seeded() {
        let w = noisy(HierLabel::fault(3, 2).unwrap(), 1);
        let spec = AttackSpec::of(AttackKind::Noise, 99);
        assert_eq!(apply_noise(&w, &NOM, &spec).unwrap(), apply_noise(&w, &NOM, &spec).unwrap());
        let zero = AttackSpec { noise_frac: 0.0, ..spec };
        assert_eq!(apply_noise(&w, &NOM, &zero).unwrap(), w);
    }

    #[test]
    fn replacement_touches_exactly_twenty_percent() {
        let w = noisy(HierLabel::fault(1, 4).unwrap(), 3);
        let spec = AttackSpec::of(AttackKind::Replacement, 8);
        let out = apply_replacement(&w, &spec).unwrap();
        let changed = changed_indices(&w, &out);
        assert_eq!(changed.len(), 80);
        assert!(changed.iter().all(|&i| i >= 50));
        for &i in &changed {
            assert_eq!(out.p[i], w.p[i - 50]);
            assert_eq!(out.v[i], w.v[i - 50]);
        }
        assert_eq!(out.label, w.label);
    }

    #[test]
    fn replacement_edge_cases() {
        let constant = quiet(HierLabel::Normal);
        let spec = AttackSpec::of(AttackKind::Replacement, 8);
        assert_eq!(apply_replacement(&constant, &spec).unwrap(), constant);
        let w = noisy(HierLabel::Normal, 4);
        assert_eq!(apply_replacement(&w, &AttackSpec { repl_frac: 0.0, ..spec.clone() }).unwrap(), w);
        assert!(apply_replacement(&w, &AttackSpec { stale_lag: 400, ..spec }).is_err());
    }

    #[test]
    fn replay_overwrites_one_contiguous_run() {
        let w = noisy(HierLabel::fault(2, 2).unwrap(), 3);
        let archive: Vec<Window> = (0..5).map(|s| noisy(HierLabel::Normal, 100 + s)).collect();
        let spec = AttackSpec::of(AttackKind::Replay, 21);
        let out = apply_replay(&w, &archive, &spec).unwrap();
        let changed = changed_indices(&w, &out);
        assert_eq!(changed.len(), 200);
        assert_eq!(changed.last().unwrap() - changed[0], 199);
        let src = archive.iter().find(|a| a.p[changed[0]] == out.p[changed[0]]).unwrap();
        assert!(changed.iter().all(|&i| out.q[i] == src.q[i]));
    }

    #[test]
    fn replay_edge_cases() {
        let w = noisy(HierLabel::fault(2, 2).unwrap(), 3);
        let archive = vec![noisy(HierLabel::Normal, 50)];
        let spec = AttackSpec::of(AttackKind::Replay, 21);
        let full = apply_replay(&w, &archive, &AttackSpec { replay_frac: 1.0, ..spec.clone() }).unwrap();
        assert_eq!((full.v.clone(), full.p.clone(), full.q.clone()), (archive[0].v.clone(), archive[0].p.clone(), archive[0].q.clone()));
        assert_eq!(full.label, w.label);
        assert_eq!(apply_replay(&w, &archive, &AttackSpec { replay_frac: 0.0, ..spec.clone() }).unwrap(), w);
        assert!(apply_replay(&w, &[], &spec).is_err());
    }

    #[test]
    fn zero_strength_attacks_match_clean() {
        let w = noisy(HierLabel::fault(4, 1).unwrap(), 9);
        let archive = vec![noisy(HierLabel::Normal, 50)];
        for kind in AttackKind::CURRICULUM {
            let spec = AttackSpec {
                kind,
                bias_frac: 0.0,
                noise_frac: 0.0,
                repl_frac: 0.0,
                replay_frac: 0.0,
                ..AttackSpec::default()
            };
            assert_eq!(apply_attack(&w, &spec, &NOM, &archive).unwrap(), w);
        }
    }

    #[test]
    fn spec_validation_and_parsing() {
        assert!(AttackSpec { bias_frac: 1.5, ..AttackSpec::default() }.validate().is_err());
        assert!(AttackSpec { stale_lag: 0, ..AttackSpec::default() }.validate().is_err());
        assert!(AttackSpec::default().validate().is_ok());
        assert_eq!("Replacement".parse::<AttackKind>().unwrap(), AttackKind::Replacement);
        assert!("dos".parse::<AttackKind>().is_err());
        let json = serde_json::to_string(&AttackSpec::of(AttackKind::Replay, 3)).unwrap();
        assert!(json.contains("\"replay\""));
    }
}
