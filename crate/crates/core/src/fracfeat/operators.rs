//! Short-memory discretizations of the Caputo (L1 scheme) and
//! Grünwald-Letnikov derivatives on uniformly sampled series.

use serde::{Deserialize, Serialize};

use super::gamma::gamma_fn;
use crate::error::{config_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracConfig {
    /// Caputo order.
    pub alpha: f64,
    /// Grünwald-Letnikov order.
    pub beta: f64,
    /// Number of past samples retained by both operators.
    pub memory_len: usize,
    pub dt: f64,
}

impl Default for FracConfig {
    fn default() -> Self {
        Self { alpha: 0.7, beta: 0.3, memory_len: 400, dt: 5e-4 }
    }
}

impl FracConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return config_err(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return config_err(format!("beta = {} outside (0, 1)", self.beta));
        }
        if self.memory_len < 2 {
            return config_err("memory_len must be at least 2");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return config_err("dt must be positive");
        }
        Ok(())
    }
}

/// Signed binomial weights `(-1)^k C(beta, k)` for k in 0..len.
pub fn gl_weights(beta: f64, len: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(len);
    if len == 0 {
        return w;
    }
    w.push(1.0);
    for k in 1..len {
        let prev = w[k - 1];
        w.push(prev * (1.0 - (beta + 1.0) / k as f64));
    }
    w
}

/// L1 weights `(j+1)^(1-alpha) - j^(1-alpha)`.
pub fn l1_weights(alpha: f64, len: usize) -> Vec<f64> {
    let e = 1.0 - alpha;
    (0..len)
        .map(|j| ((j + 1) as f64).powf(e) - (j as f64).powf(e))
        .collect()
}

/// Precomputed kernels for repeated application with one configuration.
#[derive(Debug, Clone)]
pub struct FracOperators {
    cfg: FracConfig,
    gl: Vec<f64>,
    l1: Vec<f64>,
    gl_scale: f64,
    caputo_scale: f64,
}

impl FracOperators {
    pub fn new(cfg: FracConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            gl: gl_weights(cfg.beta, cfg.memory_len),
            l1: l1_weights(cfg.alpha, cfg.memory_len - 1),
            gl_scale: cfg.dt.powf(-cfg.beta),
            caputo_scale: cfg.dt.powf(-cfg.alpha) / gamma_fn(2.0 - cfg.alpha)?,
            cfg,
        })
    }

    pub fn config(&self) -> &FracConfig {
        &self.cfg
    }

    pub fn gl(&self, series: &[f64]) -> Result<Vec<f64>> {
        if series.is_empty() {
            return Err(Error::Input("gl_derivative of an empty series".into()));
        }
        let out = (0..series.len())
            .map(|n| {
                let terms = (n + 1).min(self.gl.len());
                let acc: f64 = self.gl[..terms]
                    .iter()
                    .zip(series[..=n].iter().rev())
                    .map(|(w, x)| w * x)
                    .sum();
                self.gl_scale * acc
            })
            .collect();
        Ok(out)
    }

    pub fn caputo(&self, series: &[f64]) -> Result<Vec<f64>> {
        if series.len() < 2 {
            return Err(Error::Input("caputo_derivative needs at least two samples".into()));
        }
        // diffs[i] = x[i+1] - x[i]
        let diffs: Vec<f64> = series.windows(2).map(|p| p[1] - p[0]).collect();
        let mut out = Vec::with_capacity(series.len());
        out.push(0.0);
        for n in 1..series.len() {
            let m = n.min(self.l1.len());
            // sum_{j<m} b_j (x[n-j] - x[n-j-1]) = sum_{j<m} b_j diffs[n-1-j]
            let acc: f64 = self.l1[..m]
                .iter()
                .zip(diffs[n - m..n].iter().rev())
                .map(|(b, d)| b * d)
                .sum();
            out.push(self.caputo_scale * acc);
        }
        Ok(out)
    }
}

pub fn gl_derivative(series: &[f64], cfg: &FracConfig) -> Result<Vec<f64>> {
    FracOperators::new(*cfg)?.gl(series)
}

pub fn caputo_derivative(series: &[f64], cfg: &FracConfig) -> Result<Vec<f64>> {
    FracOperators::new(*cfg)?.caputo(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::gamma::{gamma, ln_gamma};

    const DT: f64 = 5e-4;

    fn ramp(len: usize, power: i32) -> Vec<f64> {
        (0..len).map(|i| (i as f64 * DT).powi(power)).collect()
    }

    fn full_memory(alpha: f64, beta: f64, len: usize) -> FracConfig {
        FracConfig { alpha, beta, memory_len: len, dt: DT }
    }

    fn max_rel_err(got: &[f64], want: impl Fn(f64) -> f64, from: usize) -> f64 {
        got.iter()
            .enumerate()
            .skip(from)
            .map(|(n, g)| {
                let w = want(n as f64 * DT);
                ((g - w) / w).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn gl_weights_small_case() {
        let w = gl_weights(0.3, 3);
        assert_eq!(w[0], 1.0);
        assert!((w[1] + 0.3).abs() < 1e-15);
        assert!((w[2] + 0.105).abs() < 1e-15);
    }

    #[test]
    fn gl_weights_match_log_gamma_oracle() {
        let beta = 0.3;
        let w = gl_weights(beta, 400);
        for (k, wk) in w.iter().enumerate() {
            // (-1)^k C(beta, k) = Γ(k - beta) / (Γ(-beta) Γ(k + 1)); for k >= 1 the
            // sign is negative and the magnitude is beta Γ(k - beta) / (Γ(1 - beta) Γ(k + 1)).
            let oracle = if k == 0 {
                1.0
            } else {
                let ln_mag = beta.ln() + ln_gamma(k as f64 - beta)
                    - ln_gamma(1.0 - beta)
                    - ln_gamma(k as f64 + 1.0);
                -ln_mag.exp()
            };
            assert!(((wk - oracle) / oracle).abs() < 1e-10, "k = {k}: {wk} vs {oracle}");
        }
    }

    #[test]
    fn gl_of_zero_is_zero() {
        let out = gl_derivative(&[0.0; 50], &FracConfig::default()).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gl_of_constant_approaches_power_law() {
        let c = 1.7;
        let cfg = FracConfig::default();
        let out = gl_derivative(&[c; 400], &cfg).unwrap();
        let err = max_rel_err(&out, |t| c * t.powf(-cfg.beta) / gamma(1.0 - cfg.beta), 100);
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn gl_of_square_matches_closed_form() {
        let len = 2001;
        let cfg = full_memory(0.7, 0.3, len);
        let out = gl_derivative(&ramp(len, 2), &cfg).unwrap();
        let err = max_rel_err(&out, |t| 2.0 * t.powf(2.0 - 0.3) / gamma(3.0 - 0.3), 400);
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn caputo_of_constant_is_zero() {
        let out = caputo_derivative(&[3.25; 400], &FracConfig::default()).unwrap();
        assert!(out.iter().all(|x| x.abs() <= 1e-9));
    }

    #[test]
    fn caputo_of_monomials_matches_closed_form() {
        let len = 2001;
        let cfg = full_memory(0.7, 0.3, len);
        let lin = caputo_derivative(&ramp(len, 1), &cfg).unwrap();
        let err = max_rel_err(&lin, |t| t.powf(0.3) / gamma(1.3), 100);
        assert!(err < 0.01, "linear: {err}");
        let sq = caputo_derivative(&ramp(len, 2), &cfg).unwrap();
        let err = max_rel_err(&sq, |t| 2.0 * t.powf(1.3) / gamma(2.3), 100);
        assert!(err < 0.01, "square: {err}");
    }

    #[test]
    fn caputo_near_unit_order_approaches_first_derivative() {
        let len = 2001;
        let cfg = full_memory(0.99, 0.3, len);
        let out = caputo_derivative(&ramp(len, 2), &cfg).unwrap();
        let err = max_rel_err(&out, |t| 2.0 * t, 100);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn gl_near_zero_order_approaches_identity() {
        let len = 2001;
        let cfg = full_memory(0.7, 0.01, len);
        let series = ramp(len, 2);
        let out = gl_derivative(&series, &cfg).unwrap();
        let err = max_rel_err(&out, |t| t * t, 100);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn short_memory_truncates_history() {
        // With L = 2 the GL sum only sees the current and previous sample.
        let cfg = FracConfig { memory_len: 2, ..FracConfig::default() };
        let out = gl_derivative(&[1.0, 2.0, 4.0, 8.0], &cfg).unwrap();
        let s = cfg.dt.powf(-cfg.beta);
        assert!((out[3] - s * (8.0 - 0.3 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let cfg = FracConfig::default();
        assert!(gl_derivative(&[], &cfg).is_err());
        assert!(caputo_derivative(&[1.0], &cfg).is_err());
        assert!(FracConfig { alpha: 1.0, ..cfg }.validate().is_err());
        assert!(FracConfig { beta: 0.0, ..cfg }.validate().is_err());
        assert!(FracConfig { memory_len: 1, ..cfg }.validate().is_err());
        assert!(FracConfig { dt: 0.0, ..cfg }.validate().is_err());
    }

    proptest! {
        #[test]
        fn both_operators_are_linear(
            f in prop::collection::vec(-1.0f64..1.0, 64),
            g in prop::collection::vec(-1.0f64..1.0, 64),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let ops = FracOperators::new(FracConfig { memory_len: 40, ..FracConfig::default() }).unwrap();
            let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            for op in [FracOperators::caputo, FracOperators::gl] {
                let lhs = op(&ops, &combo).unwrap();
                let (df, dg) = (op(&ops, &f).unwrap(), op(&ops, &g).unwrap());
                for i in 0..lhs.len() {
                    let rhs = a * df[i] + b * dg[i];
                    prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
                }
            }
        }
    }
}
