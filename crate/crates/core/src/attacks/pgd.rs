use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::fracfeat::FeatureVector;
use crate::seed;

/// Anything that can report a loss and its gradient with respect to the input.
pub trait InputGradient {
    fn loss_and_input_grad(&self, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    /// ℓ∞ radius in normalized feature units.
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: f64,
    pub random_start: bool,
}

impl Default for PgdConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, steps: 10, step_size: 0.025, random_start: true }
    }
}

impl PgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return config_err("pgd epsilon must be finite and non-negative");
        }
        if self.steps < 1 {
            return config_err("pgd needs at least one step");
        }
        if !(self.step_size >= 0.0) || self.step_size > self.epsilon {
            return config_err("pgd step_size must lie in [0, epsilon]");
        }
        Ok(())
    }
}

pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Signed-gradient ascent on the loss, projected onto the ℓ∞ ball of radius
/// `epsilon` around `x` after every step.
pub fn pgd_attack<G: InputGradient + ?Sized>(
    oracle: &G,
    x: &FeatureVector,
    y: usize,
    cfg: &PgdConfig,
    seed: u64,
) -> Result<FeatureVector> {
    cfg.validate()?;
    let center = x.as_slice();
    let eps = cfg.epsilon;
    let project = |v: &mut [f64]| {
        for (vi, ci) in v.iter_mut().zip(center) {
            *vi = vi.clamp(ci - eps, ci + eps);
        }
    };

    let mut adv = center.to_vec();
    if cfg.random_start && eps > 0.0 {
        let mut rng = seed::rng_from(seed::mix(seed, &[seed::tag::PGD]));
        for a in adv.iter_mut() {
            *a += rng.random_range(-eps..=eps);
        }
        project(&mut adv);
    }

    for _ in 0..cfg.steps {
        let (_, grad) = oracle.loss_and_input_grad(&adv, y)?;
        if grad.len() != adv.len() {
            return Err(Error::Shape { expected: adv.len(), got: grad.len() });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("pgd input gradient"));
        }
        for (a, g) in adv.iter_mut().zip(&grad) {
            // sign(0) = 0: flat directions are left alone.
            if *g > 0.0 {
                *a += cfg.step_size;
            } else if *g < 0.0 {
                *a -= cfg.step_size;
            }
        }
        project(&mut adv);
    }

    let dist = linf_distance(&adv, center);
    if dist > eps + 1e-12 {
        return Err(Error::Input(format!("pgd left the epsilon ball: {dist} > {eps}")));
    }
    Ok(FeatureVector(adv))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Softmax regression with a fixed weight matrix; gradient in closed form.
    struct Linear {
        w: Vec<Vec<f64>>,
    }

    impl InputGradient for Linear {
        fn loss_and_input_grad(&self, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
            let logits: Vec<f64> = self.w.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
            let p: Vec<f64> = logits.iter().map(|l| (l - m).exp() / z).collect();
            let mut g = vec![0.0; x.len()];
            for (k, row) in self.w.iter().enumerate() {
                let coef = p[k] - if k == y { 1.0 } else { 0.0 };
                for (gi, wi) in g.iter_mut().zip(row) {
                    *gi += coef * wi;
                }
            }
            Ok((-p[y].ln(), g))
        }
    }

    struct Broken;

    impl InputGradient for Broken {
        fn loss_and_input_grad(&self, x: &[f64], _y: usize) -> Result<(f64, Vec<f64>)> {
            Ok((0.0, vec![f64::NAN; x.len()]))
        }
    }

    fn oracle() -> Linear {
        Linear { w: vec![vec![1.0, -2.0, 0.5], vec![-0.5, 1.0, 2.0], vec![0.3, 0.3, -1.0]] }
    }

    #[test]
    fn zero_radius_returns_input() {
        let x = FeatureVector(vec![0.2, -0.4, 1.0]);
        let cfg = PgdConfig { epsilon: 0.0, step_size: 0.0, ..PgdConfig::default() };
        assert_eq!(pgd_attack(&oracle(), &x, 1, &cfg, 3).unwrap(), x);
    }

    #[test]
    fn stays_inside_ball_and_raises_loss() {
        let x = FeatureVector(vec![0.2, -0.4, 1.0]);
        let o = oracle();
        let cfg = PgdConfig { random_start: false, ..PgdConfig::default() };
        let adv = pgd_attack(&o, &x, 1, &cfg, 3).unwrap();
        assert!(linf_distance(&adv.0, &x.0) <= 0.1 + 1e-12);
        let clean = o.loss_and_input_grad(&x.0, 1).unwrap().0;
        let attacked = o.loss_and_input_grad(&adv.0, 1).unwrap().0;
        assert!(attacked > clean);
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let x = FeatureVector(vec![0.0; 3]);
        assert!(matches!(
            pgd_attack(&Broken, &x, 0, &PgdConfig::default(), 0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(PgdConfig { steps: 0, ..PgdConfig::default() }.validate().is_err());
        assert!(PgdConfig { step_size: 0.2, ..PgdConfig::default() }.validate().is_err());
        assert!(PgdConfig::default().validate().is_ok());
    }
}
