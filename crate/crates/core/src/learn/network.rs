use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelKind};
use super::standardize::Standardizer;
use super::{Dataset, LearnError, Result};

/// One dense layer: `out = W · in + b`, with `W` stored row-major as
/// `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            w: vec![vec![0.0; fan_in]; fan_out],
            b: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    pub fn fan_out(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// Feedforward regressor: rectified-linear hidden layers, linear scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    /// Glorot-uniform weights, zero biases. `sizes` runs from the input
    /// width to the output width (1).
    pub fn init(sizes: &[usize], rng: &mut impl Rng) -> Self {
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    w: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| rng.random_range(-limit..=limit)).collect())
                        .collect(),
                    b: vec![0.0; fan_out],
                }
            })
            .collect();
        Network { layers }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers.first().map_or(0, Layer::fan_in)];
        sizes.extend(self.layers.iter().map(Layer::fan_out));
        sizes
    }

    /// Activations of every layer (input first) and hidden pre-activations.
    fn trace(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut acts = vec![input.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(acts.last().expect("input present"));
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        (acts, pre)
    }

    pub fn forward(&self, input: &[f64]) -> f64 {
        let mut a = input.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            a = layer.apply(&a);
            if l != last {
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        a[0]
    }

    pub fn mse(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(r, t)| (self.forward(r) - t).powi(2))
            .sum::<f64>()
            / y.len() as f64
    }

    /// Mean squared error over `(x, y)` and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
            .collect();
        let n = y.len() as f64;
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for (row, target) in x.iter().zip(y) {
            let (acts, pre) = self.trace(row);
            let err = acts[last + 1][0] - target;
            loss += err * err;
            let mut delta = vec![2.0 * err / n];
            for l in (0..=last).rev() {
                let input = &acts[l];
                let g = &mut grads[l];
                for (o, d) in delta.iter().enumerate() {
                    g.b[o] += d;
                    for (gw, a) in g.w[o].iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let layer = &self.layers[l];
                delta = (0..layer.fan_in())
                    .map(|i| {
                        if pre[l - 1][i] > 0.0 {
                            delta.iter().zip(&layer.w).map(|(d, row)| d * row[i]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        (loss / n, grads)
    }

    /// All weights and biases, layer by layer (`W` row-major, then `b`).
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for layer in &mut self.layers {
            for v in layer.w.iter_mut().flatten().chain(layer.b.iter_mut()) {
                *v = it.next().expect("parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }

    /// Smallest |pre-activation| over all hidden units and rows; gradient
    /// checks need this away from the rectifier kink.
    pub fn min_abs_hidden_preactivation(&self, x: &[Vec<f64>]) -> f64 {
        let hidden = self.layers.len() - 1;
        x.iter()
            .flat_map(|r| self.trace(r).1.into_iter().take(hidden).flatten())
            .map(f64::abs)
            .fold(f64::INFINITY, f64::min)
    }

    fn step(&mut self, grads: &[Layer], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, gw) in layer.w.iter_mut().flatten().zip(g.w.iter().flatten()) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.b.iter_mut().zip(&g.b) {
                *b -= lr * gb;
            }
        }
    }
}

/// Flattens layers in the same order as [`Network::params`].
pub(crate) fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.w.iter().flatten().chain(&l.b).copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for DnnConfig {
    fn default() -> Self {
        DnnConfig {
            hidden: vec![16, 16],
            epochs: 200,
            lr: 0.01,
            batch: 16,
            seed: 0,
        }
    }
}

/// Mean squared error per epoch. Entry 0 is measured before the first
/// update, entry `e` after epoch `e`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossCurve {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
}

impl LossCurve {
    pub fn initial_train(&self) -> Option<f64> {
        self.train.first().copied()
    }

    pub fn final_train(&self) -> Option<f64> {
        self.train.last().copied()
    }

    /// `epoch,train_loss,val_loss`
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for (e, (t, v)) in self.train.iter().zip(&self.val).enumerate() {
            w.write_record([e.to_string(), t.to_string(), v.to_string()])?;
        }
        w.flush()
    }
}

/// Mini-batch gradient descent on mean squared error.
///
/// Weights come from `ChaCha8(seed)`; batch order from the same seed on a
/// separate stream. Training is single-threaded, so a fixed configuration
/// reproduces identical weights.
pub fn fit_dnn(train: &Dataset, val: &Dataset, config: &DnnConfig) -> Result<(Model, LossCurve)> {
    if train.len() < 20 {
        return Err(LearnError::TooFewRows { needed: 20, got: train.len() });
    }
    if val.is_empty() {
        return Err(LearnError::EmptyEvalSet);
    }
    if config.batch == 0 || config.hidden.iter().any(|&h| h == 0) {
        return Err(LearnError::InvalidConfig("batch and hidden sizes must be positive".into()));
    }
    if !(config.lr > 0.0 && config.lr.is_finite()) {
        return Err(LearnError::InvalidConfig("learning rate must be positive".into()));
    }
    let p = train.n_features();
    if p == 0 {
        return Err(LearnError::InvalidConfig("no features selected".into()));
    }
    let standardizer = Standardizer::fit(&train.x);
    let xt = standardizer.transform(&train.x);
    let xv = standardizer.transform(&val.x);

    let mut sizes = vec![p];
    sizes.extend(&config.hidden);
    sizes.push(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::init(&sizes, &mut rng);
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    order_rng.set_stream(1);

    let mut curve = LossCurve::default();
    let record = |net: &Network, epoch: usize, curve: &mut LossCurve| {
        let (t, v) = (net.mse(&xt, &train.y), net.mse(&xv, &val.y));
        if !(t.is_finite() && v.is_finite()) {
            return Err(LearnError::NonFiniteLoss {
                epoch,
                last_finite: curve.train.last().copied(),
            });
        }
        curve.train.push(t);
        curve.val.push(v);
        Ok(())
    };
    record(&net, 0, &mut curve)?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut bx = Vec::with_capacity(config.batch);
    let mut by = Vec::with_capacity(config.batch);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut order_rng);
        for chunk in order.chunks(config.batch) {
            bx.clear();
            by.clear();
            bx.extend(chunk.iter().map(|&i| xt[i].clone()));
            by.extend(chunk.iter().map(|&i| train.y[i]));
            let (_, grads) = net.loss_and_gradient(&bx, &by);
            net.step(&grads, config.lr);
        }
        record(&net, epoch, &mut curve)?;
    }
    log::debug!(
        "dnn trained: loss {:?} -> {:?}",
        curve.initial_train(),
        curve.final_train()
    );

    Ok((
        Model {
            kind: ModelKind::Dnn,
            features: train.features.clone(),
            standardizer,
            lrm: None,
            dnn: Some(net),
        },
        curve,
    ))
}
