use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tuner::{Dataset, DatasetRow, Normalization, FEATURE_DIM, TARGET_DIM};

/// Adam settings and training budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Decoupled L2 shrinkage of the weights per step, scaled by the rate.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 400,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be ≥ 0, got {}", self.learning_rate)));
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(Error::Config("moment decay rates must lie in (0, 1)".into()));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!("weight decay must be ≥ 0, got {}", self.weight_decay)));
        }
        if !(self.epsilon > 0.0) || self.batch_size == 0 {
            return Err(Error::Config("epsilon must be > 0 and batch size ≥ 1".into()));
        }
        Ok(())
    }
}

/// Dense layer, weights stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Multilayer perceptron on normalized features and targets. Hidden layers
/// use ReLU; the output layer is linear in normalized target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// He-normal weights and zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut l = Layer::zeros(w[0], w[1]);
                let scale = (2.0 / w[0] as f64).sqrt();
                for v in &mut l.weights {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    *v = scale * n;
                }
                l
            })
            .collect();
        Ok(Self { layers })
    }

    /// Same architecture with every weight and bias zero.
    pub fn zeroed(sizes: &[usize]) -> Result<Self> {
        let mut m = Self::new(sizes, 0)?;
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        Ok(m)
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Flat parameters: per layer, weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend(&l.weights);
            p.extend(&l.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[i..i + nw]);
            i += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&p[i..i + nb]);
            i += nb;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.apply(&a, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut a, &mut next);
        }
        a
    }

    /// Mean over samples and outputs of the squared error, and its gradient
    /// with respect to [`Mlp::parameters`].
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[&[f64]]) -> (f64, Vec<f64>) {
        let n_out = self.output_dim();
        let scale = 1.0 / (xs.len() * n_out) as f64;
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        for (x, y) in xs.iter().zip(ys) {
            acts.clear();
            acts.push(x.to_vec());
            for (i, l) in self.layers.iter().enumerate() {
                let mut out = Vec::with_capacity(l.outputs);
                l.apply(&acts[i], &mut out);
                if i < last {
                    out.iter_mut().for_each(|v| *v = v.max(0.0));
                }
                acts.push(out);
            }
            let mut delta: Vec<f64> = acts[last + 1]
                .iter()
                .zip(y.iter())
                .map(|(p, t)| {
                    loss += (p - t) * (p - t);
                    2.0 * (p - t) * scale
                })
                .collect();
            for i in (0..=last).rev() {
                let l = &self.layers[i];
                let g = &mut grads[i];
                let input = &acts[i];
                for o in 0..l.outputs {
                    g.biases[o] += delta[o];
                    let row = &mut g.weights[o * l.inputs..(o + 1) * l.inputs];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += delta[o] * v;
                    }
                }
                if i > 0 {
                    let mut back = vec![0.0; l.inputs];
                    for o in 0..l.outputs {
                        let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                        for (b, w) in back.iter_mut().zip(row) {
                            *b += delta[o] * w;
                        }
                    }
                    // ReLU derivative of the hidden activation feeding this layer
                    for (b, a) in back.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        let flat = Mlp { layers: grads }.parameters();
        (loss * scale, flat)
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[&[f64]]) -> f64 {
        let n = (xs.len() * self.output_dim()) as f64;
        xs.iter()
            .zip(ys)
            .map(|(x, y)| self.forward(x).iter().zip(y.iter()).map(|(p, t)| (p - t) * (p - t)).sum::<f64>())
            .sum::<f64>()
            / n
    }
}

/// Adam moment state.
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], decay: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * (m_hat / (v_hat.sqrt() + cfg.epsilon) + decay[i] * params[i]);
        }
    }
}

/// Trains `net` on normalized pairs with mini-batch Adam. Returns the full
/// training loss before the first epoch and after every epoch.
pub fn train_network(net: &mut Mlp, xs: &[Vec<f64>], ys: &[Vec<f64>], cfg: &TrainConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::Empty("training rows"));
    }
    let all_x: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let all_y: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = net.parameters();
    let mut adam = Adam::new(params.len());
    // biases are not decayed
    let decay: Vec<f64> = net
        .layers
        .iter()
        .flat_map(|l| {
            std::iter::repeat_n(cfg.weight_decay, l.weights.len()).chain(std::iter::repeat_n(0.0, l.biases.len()))
        })
        .collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    history.push(net.loss(&all_x, &all_y));
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| all_x[i]).collect();
            let by: Vec<&[f64]> = batch.iter().map(|&i| all_y[i]).collect();
            let (_, grad) = net.loss_and_gradient(&bx, &by);
            adam.step(&mut params, &grad, &decay, cfg);
            net.set_parameters(&params);
        }
        let loss = net.loss(&all_x, &all_y);
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss });
        }
        history.push(loss);
    }
    Ok(history)
}

/// Per-epoch loss history as `epoch,loss` CSV.
pub fn write_loss_history(history: &[f64], path: &Path) -> Result<()> {
    let mut text = String::from("epoch,loss\n");
    for (i, l) in history.iter().enumerate() {
        text.push_str(&format!("{i},{l:?}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Normalized feature and target matrices of dataset rows.
pub fn normalized_pairs(
    rows: &[DatasetRow],
    features: &Normalization,
    targets: &Normalization,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    rows.iter().map(|r| (features.normalize(&r.features), targets.normalize(&r.targets))).unzip()
}

/// Checks that a dataset matches the surrogate's fixed input/output widths.
pub fn check_widths(ds: &Dataset) -> Result<()> {
    if ds.features.dim() != FEATURE_DIM || ds.targets.dim() != TARGET_DIM {
        return Err(Error::Surrogate(format!(
            "dataset has {} features and {} targets, expected {FEATURE_DIM} and {TARGET_DIM}",
            ds.features.dim(),
            ds.targets.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_batch(n: usize, d_in: usize, d_out: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = (0..n).map(|_| (0..d_in).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys = (0..n).map(|_| (0..d_out).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        (xs, ys)
    }

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn analytic_gradient_matches_central_differences(seed in 0u64..10_000) {
            let mut net = Mlp::new(&[4, 6, 5, 3], seed).unwrap();
            // random biases keep pre-activations off the ReLU kink
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
            for l in &mut net.layers {
                l.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            }
            let (xs, ys) = random_batch(5, 4, 3, seed + 1);
            let (x, y) = (refs(&xs), refs(&ys));
            let (_, grad) = net.loss_and_gradient(&x, &y);
            let p0 = net.parameters();
            let h = 1e-6;
            let mut probe = net.clone();
            for i in 0..p0.len() {
                let mut p = p0.clone();
                p[i] += h;
                probe.set_parameters(&p);
                let up = probe.loss(&x, &y);
                p[i] -= 2.0 * h;
                probe.set_parameters(&p);
                let down = probe.loss(&x, &y);
                let numeric = (up - down) / (2.0 * h);
                let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-6);
                prop_assert!(rel <= 1e-4, "parameter {}: analytic {} numeric {}", i, grad[i], numeric);
            }
        }
    }

    #[test]
    fn zero_learning_rate_keeps_the_loss_constant() {
        let mut net = Mlp::new(&[3, 8, 2], 1).unwrap();
        let (xs, ys) = random_batch(20, 3, 2, 2);
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 5, ..TrainConfig::default() };
        let h = train_network(&mut net, &xs, &ys, &cfg).unwrap();
        assert!(h.iter().all(|&l| l == h[0]));
    }

    #[test]
    fn same_seed_gives_the_same_final_loss() {
        let (xs, ys) = random_batch(40, 3, 2, 3);
        let cfg = TrainConfig { epochs: 20, seed: 7, ..TrainConfig::default() };
        let run = || {
            let mut net = Mlp::new(&[3, 8, 2], 4).unwrap();
            train_network(&mut net, &xs, &ys, &cfg).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn exploding_updates_abort_with_a_diagnostic() {
        let mut net = Mlp::new(&[2, 4, 1], 5).unwrap();
        let xs = vec![vec![1e200, -1e200]; 4];
        let ys = vec![vec![1.0]; 4];
        let r = train_network(&mut net, &xs, &ys, &TrainConfig { epochs: 3, ..TrainConfig::default() });
        assert!(matches!(r, Err(Error::TrainingDiverged { .. })));
    }

    #[test]
    fn zeroed_network_outputs_zero() {
        let net = Mlp::zeroed(&[5, 7, 3]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]), vec![0.0; 3]);
    }
}
