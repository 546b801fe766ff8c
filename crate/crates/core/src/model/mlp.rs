//! Fully connected tanh network with a softmax head and hand-written
//! backpropagation (parameter and input gradients).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::InputGradient;
use crate::error::{config_err, Error, Result};
use crate::seed;

pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let spec = Self { layer_sizes };
        spec.validate()?;
        Ok(spec)
    }

    /// `input-64-32-5` inverter localization network.
    pub fn stage1(input_dim: usize) -> Self {
        Self { layer_sizes: vec![input_dim, 64, 32, 5] }
    }

    /// `input-32-6` switch isolation network.
    pub fn stage2(input_dim: usize) -> Self {
        Self { layer_sizes: vec![input_dim, 32, 6] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return config_err("an mlp needs at least one hidden layer");
        }
        if self.layer_sizes.contains(&0) {
            return config_err("layer sizes must be positive");
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }
}

/// Dense layer, weights row-major `rows = outputs`, `cols = inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols], bias: vec![0.0; rows] }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>())
            .collect()
    }

    /// Wᵀ·delta
    fn back(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, d) in self.weights.chunks_exact(self.cols).zip(delta) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += d * w;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub spec: MlpSpec,
    pub init_seed: u64,
    pub layers: Vec<Layer>,
}

/// Same shapes as the parameters; also used as the momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(p: &MlpParams) -> Self {
        Self { layers: p.layers.iter().map(|l| Layer::zeros(l.rows, l.cols)).collect() }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|x| *x *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|x| x.is_finite()))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn loss_ce(probs: &[f64], y: usize) -> Result<f64> {
    let p = probs
        .get(y)
        .ok_or_else(|| Error::Input(format!("class {y} out of range for {} outputs", probs.len())))?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: MlpSpec, init_seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng_from(seed::mix(init_seed, &[seed::tag::INIT]));
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|io| {
                let (fan_in, fan_out) = (io[0], io[1]);
                let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = Layer::zeros(fan_out, fan_in);
                layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-s..=s));
                layer
            })
            .collect();
        Ok(Self { spec, init_seed, layers })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layer_sizes.windows(2).map(|io| Layer::zeros(io[1], io[0])).collect();
        Ok(Self { spec, init_seed: 0, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Mutable access in the same order as [`Gradients::flat`].
    pub fn param_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let expected: Vec<(usize, usize)> =
            self.spec.layer_sizes.windows(2).map(|io| (io[1], io[0])).collect();
        if self.layers.len() != expected.len() {
            return Err(Error::Shape { expected: expected.len(), got: self.layers.len() });
        }
        for (l, (rows, cols)) in self.layers.iter().zip(expected) {
            if l.rows != rows || l.cols != cols || l.weights.len() != rows * cols || l.bias.len() != rows {
                return Err(Error::Input(format!("layer shape mismatch, expected {rows}x{cols}")));
            }
            if l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("mlp parameters"));
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape { expected: self.input_dim(), got: x.len() });
        }
        Ok(())
    }

    /// Activations of every layer; the last entry holds the output logits.
    fn trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = acts.last().map(Vec::as_slice).unwrap_or(x);
            let mut z = layer.affine(input);
            if i < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        if acts.last().expect("non-empty").iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mlp forward pass"));
        }
        Ok(acts)
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.pop().expect("non-empty"))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Adds `weight · ∂loss/∂θ` into `grads` and returns `(loss, ∂loss/∂x)`.
    pub fn accumulate(
        &self,
        x: &[f64],
        y: usize,
        weight: f64,
        mut grads: Option<&mut Gradients>,
    ) -> Result<(f64, Vec<f64>)> {
        let acts = self.trace(x)?;
        let probs = softmax(acts.last().expect("non-empty"));
        let loss = loss_ce(&probs, y)?;
        let mut delta = probs;
        delta[y] -= 1.0;

        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 { x } else { &acts[l - 1] };
            if let Some(g) = grads.as_deref_mut() {
                let gl = &mut g.layers[l];
                for (r, d) in delta.iter().enumerate() {
                    let wd = weight * d;
                    gl.bias[r] += wd;
                    for (gw, xi) in gl.weights[r * gl.cols..(r + 1) * gl.cols].iter_mut().zip(input) {
                        *gw += wd * xi;
                    }
                }
            }
            let mut back = self.layers[l].back(&delta);
            if l > 0 {
                for (b, a) in back.iter_mut().zip(&acts[l - 1]) {
                    *b *= 1.0 - a * a;
                }
            }
            delta = back;
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mlp backward pass"));
        }
        Ok((loss, delta))
    }

    /// Gradients of `loss_ce(forward(x), y)` with respect to all parameters and to `x`.
    pub fn backward(&self, x: &[f64], y: usize) -> Result<(Gradients, Vec<f64>)> {
        let mut g = Gradients::zeros_like(self);
        let (_, dx) = self.accumulate(x, y, 1.0, Some(&mut g))?;
        if !g.is_finite() {
            return Err(Error::NonFinite("parameter gradients"));
        }
        Ok((g, dx))
    }
}

impl InputGradient for MlpParams {
    fn loss_and_input_grad(&self, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
        self.accumulate(x, y, 1.0, None)
    }
}

/// Classic momentum: `v ← μ·v + g; θ ← θ − lr·v`.
pub fn sgd_step(
    params: &MlpParams,
    grads: &Gradients,
    lr: f64,
    momentum: f64,
    velocity: &mut Gradients,
) -> MlpParams {
    let mut next = params.clone();
    for ((p, g), v) in next.layers.iter_mut().zip(&grads.layers).zip(&mut velocity.layers) {
        let pv = p.weights.iter_mut().chain(p.bias.iter_mut());
        let gv = g.weights.iter().chain(&g.bias);
        let vv = v.weights.iter_mut().chain(v.bias.iter_mut());
        for ((pi, gi), vi) in pv.zip(gv).zip(vv) {
            *vi = momentum * *vi + gi;
            *pi -= lr * *vi;
        }
    }
    next
}
