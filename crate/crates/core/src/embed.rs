//! Projection from item features into the style space, and its training.
//!
//! The model is a small multilayer perceptron: affine layers with a rectifier
//! between consecutive layers and none after the last. Both members of a pair
//! go through the same parameters, which is the Siamese weight sharing.
//!
//! Training minimizes the mean contrastive loss over labeled pairs:
//!
//! ```text
//! positive: d^2
//! negative: max(0, m - d)^2
//! ```
//!
//! where `d` is the Euclidean distance between the two embeddings and `m` the
//! margin.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ItemId;
use crate::sampler::{Label, Pair, PairDataset};
use crate::seed;

pub const FORMAT_VERSION: &str = "1";

/// Affine layer; `w` is row-major with `b.len()` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Layer {
            w: vec![0.0; rows * cols],
            b: vec![0.0; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn cols(&self) -> usize {
        self.w.len().checked_div(self.b.len()).unwrap_or(0)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let cols = x.len();
        self.b
            .iter()
            .enumerate()
            .map(|(r, bias)| {
                let row = &self.w[r * cols..(r + 1) * cols];
                row.iter().zip(x).fold(*bias, |acc, (w, v)| acc + w * v)
            })
            .collect()
    }
}

/// Serialized as `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub version: String,
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub layers: Vec<Layer>,
    /// Margin the model was trained with.
    pub margin: f64,
    pub seed: u64,
}

impl ProjectionModel {
    /// Glorot-uniform weights and zero biases.
    pub fn init(
        input_dim: usize,
        hidden_dims: &[usize],
        output_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        let dims = Self::chain(input_dim, hidden_dims, output_dim)?;
        let mut rng = seed::rng(seed, "model/init");
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = Layer::zeros(fan_out, fan_in);
                for v in &mut layer.w {
                    *v = rng.random_range(-limit..limit);
                }
                layer
            })
            .collect();
        Ok(ProjectionModel {
            version: FORMAT_VERSION.into(),
            input_dim,
            output_dim,
            hidden_dims: hidden_dims.to_vec(),
            layers,
            margin: TrainConfig::default().margin,
            seed,
        })
    }

    /// All-zero parameters with the given shape.
    pub fn zeros(input_dim: usize, hidden_dims: &[usize], output_dim: usize) -> Result<Self> {
        let dims = Self::chain(input_dim, hidden_dims, output_dim)?;
        Ok(ProjectionModel {
            version: FORMAT_VERSION.into(),
            input_dim,
            output_dim,
            hidden_dims: hidden_dims.to_vec(),
            layers: dims.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect(),
            margin: TrainConfig::default().margin,
            seed: 0,
        })
    }

    fn chain(input_dim: usize, hidden_dims: &[usize], output_dim: usize) -> Result<Vec<usize>> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden_dims);
        dims.push(output_dim);
        if dims.contains(&0) {
            return Err(Error::Parameter(format!(
                "layer dimensions must be positive: {dims:?}"
            )));
        }
        Ok(dims)
    }

    /// Checks that layer shapes chain from `input_dim` to `output_dim` and
    /// that every parameter is finite.
    pub fn validate(&self) -> Result<()> {
        let dims = Self::chain(self.input_dim, &self.hidden_dims, self.output_dim)?;
        if self.layers.len() != dims.len() - 1 {
            return Err(Error::Parameter(format!(
                "expected {} layers, found {}",
                dims.len() - 1,
                self.layers.len()
            )));
        }
        for (l, (layer, w)) in self.layers.iter().zip(dims.windows(2)).enumerate() {
            if layer.b.len() != w[1] || layer.w.len() != w[0] * w[1] {
                return Err(Error::Parameter(format!(
                    "layer {l} has shape {}x{} (w len {}), expected {}x{}",
                    layer.b.len(),
                    layer.cols(),
                    layer.w.len(),
                    w[1],
                    w[0]
                )));
            }
            if layer.w.iter().chain(&layer.b).any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "layer {l} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ProjectionModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn forward_trace(&self, x: &[f64]) -> Trace {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&h);
            let next = if l < last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        Trace { inputs, pre }
    }

    fn backward(&self, trace: &Trace, grad_out: &[f64], grads: &mut [Layer]) {
        let last = self.layers.len() - 1;
        let mut g = grad_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            if l < last {
                for (gi, z) in g.iter_mut().zip(&trace.pre[l]) {
                    if *z <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let input = &trace.inputs[l];
            let cols = input.len();
            let acc = &mut grads[l];
            for (r, gr) in g.iter().enumerate() {
                acc.b[r] += gr;
                let row = &mut acc.w[r * cols..(r + 1) * cols];
                for (w, x) in row.iter_mut().zip(input) {
                    *w += gr * x;
                }
            }
            if l > 0 {
                let layer = &self.layers[l];
                let mut prev = vec![0.0; cols];
                for (r, gr) in g.iter().enumerate() {
                    let row = &layer.w[r * cols..(r + 1) * cols];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += gr * w;
                    }
                }
                g = prev;
            }
        }
    }

    fn zero_grads(&self) -> Vec<Layer> {
        self.layers
            .iter()
            .map(|l| Layer::zeros(l.rows(), l.cols()))
            .collect()
    }
}

struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Trace {
    fn output(&self) -> &[f64] {
        self.pre.last().expect("model has at least one layer")
    }
}

/// Maps a feature vector into the style space.
pub fn embed(model: &ProjectionModel, features: &[f64]) -> Result<Vec<f64>> {
    if features.len() != model.input_dim {
        return Err(Error::Dimension {
            expected: model.input_dim,
            actual: features.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "feature vector has non-finite entries".into(),
        ));
    }
    let mut h = features.to_vec();
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        h = layer.apply(&h);
        if l < last {
            h.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("embedding overflowed".into()));
    }
    Ok(h)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveTerm {
    pub loss: f64,
    pub grad_a: Vec<f64>,
    pub grad_b: Vec<f64>,
}

/// Contrastive loss of one pair with gradients for both embeddings.
///
/// At the hinge point `d = m` and at `d = 0` for negatives the gradient is
/// taken as zero.
pub fn contrastive_loss(
    s_a: &[f64],
    s_b: &[f64],
    label: Label,
    margin: f64,
) -> Result<ContrastiveTerm> {
    if s_a.len() != s_b.len() {
        return Err(Error::Dimension {
            expected: s_a.len(),
            actual: s_b.len(),
        });
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::Parameter(format!(
            "margin must be positive, got {margin}"
        )));
    }
    if s_a.iter().chain(s_b).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("embedding has non-finite entries".into()));
    }
    let diff: Vec<f64> = s_a.iter().zip(s_b).map(|(a, b)| a - b).collect();
    let d2: f64 = diff.iter().map(|v| v * v).sum();
    let (loss, scale) = match label {
        // d(d^2)/ds_a = 2 (s_a - s_b)
        Label::Positive => (d2, 2.0),
        Label::Negative => {
            let d = d2.sqrt();
            if d >= margin || d == 0.0 {
                ((margin - d).max(0.0).powi(2), 0.0)
            } else {
                // d/ds_a (m - d)^2 = -2 (m - d) (s_a - s_b) / d
                ((margin - d).powi(2), -2.0 * (margin - d) / d)
            }
        }
    };
    let grad_a: Vec<f64> = diff.iter().map(|v| scale * v).collect();
    let grad_b = grad_a.iter().map(|v| -v).collect();
    Ok(ContrastiveTerm {
        loss,
        grad_a,
        grad_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Hidden layer widths used by [`TrainConfig::init_model`]; empty means a
    /// single affine layer.
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 1.0,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 10,
            batch_size: 64,
            seed: 0,
            hidden_dims: Vec::new(),
            output_dim: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(Error::Parameter(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Parameter("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Parameter("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        Ok(())
    }

    pub fn init_model(&self, input_dim: usize) -> Result<ProjectionModel> {
        let mut model =
            ProjectionModel::init(input_dim, &self.hidden_dims, self.output_dim, self.seed)?;
        model.margin = self.margin;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub per_epoch_mean_loss: Vec<f64>,
    pub final_train_loss: f64,
    /// `None` when the dataset has no validation pairs.
    pub final_val_loss: Option<f64>,
}

type Resolved<'a> = (&'a [f64], &'a [f64], Label);

fn resolve<'a>(
    features: &'a BTreeMap<ItemId, Vec<f64>>,
    pairs: &[Pair],
    dim: usize,
) -> Result<Vec<Resolved<'a>>> {
    let get = |id: &ItemId| -> Result<&'a [f64]> {
        let f = features
            .get(id)
            .ok_or_else(|| Error::MissingFeatures(id.clone()))?;
        if f.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: f.len(),
            });
        }
        Ok(f.as_slice())
    };
    pairs
        .iter()
        .map(|p| Ok((get(&p.a)?, get(&p.b)?, p.label)))
        .collect()
}

fn mean_loss(model: &ProjectionModel, pairs: &[Resolved<'_>], margin: f64) -> Result<f64> {
    let mut total = 0.0;
    for (a, b, label) in pairs {
        total += contrastive_loss(&embed(model, a)?, &embed(model, b)?, *label, margin)?.loss;
    }
    Ok(total / pairs.len().max(1) as f64)
}

/// Adds the gradient of one pair's loss to `grads`; returns the loss.
fn accumulate(
    model: &ProjectionModel,
    a: &[f64],
    b: &[f64],
    label: Label,
    margin: f64,
    grads: &mut [Layer],
) -> Result<f64> {
    let ta = model.forward_trace(a);
    let tb = model.forward_trace(b);
    let term = contrastive_loss(ta.output(), tb.output(), label, margin)?;
    if term.loss > 0.0 {
        model.backward(&ta, &term.grad_a, grads);
        model.backward(&tb, &term.grad_b, grads);
    }
    Ok(term.loss)
}

/// Mini-batch gradient descent with momentum on the mean contrastive loss.
///
/// The visiting order is reshuffled every epoch from a stream derived from
/// `config.seed`, and gradients are summed in batch order, so a run is
/// bit-reproducible.
pub fn train(
    model: &ProjectionModel,
    features: &BTreeMap<ItemId, Vec<f64>>,
    dataset: &PairDataset,
    config: &TrainConfig,
) -> Result<(ProjectionModel, LossTrace)> {
    config.validate()?;
    model.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::EmptyInput("no training pairs".into()));
    }
    let train_pairs = resolve(features, &dataset.train, model.input_dim)?;
    let val_pairs = resolve(features, &dataset.validation, model.input_dim)?;

    let mut model = model.clone();
    model.margin = config.margin;
    let mut velocity = model.zero_grads();
    let mut rng = seed::rng(config.seed, "train/shuffle");
    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut per_epoch = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.zero_grads();
            for &i in batch {
                let (a, b, label) = train_pairs[i];
                let loss =
                    accumulate(&model, a, b, label, config.margin, &mut grads).map_err(|_| {
                        Error::Divergence {
                            epoch,
                            loss: f64::NAN,
                        }
                    })?;
                epoch_loss += loss;
            }
            let scale = 1.0 / batch.len() as f64;
            for ((layer, grad), vel) in model.layers.iter_mut().zip(&grads).zip(&mut velocity) {
                for ((p, g), v) in layer.w.iter_mut().zip(&grad.w).zip(&mut vel.w) {
                    *v = config.momentum * *v - config.learning_rate * g * scale;
                    *p += *v;
                }
                for ((p, g), v) in layer.b.iter_mut().zip(&grad.b).zip(&mut vel.b) {
                    *v = config.momentum * *v - config.learning_rate * g * scale;
                    *p += *v;
                }
            }
        }
        let mean = epoch_loss / train_pairs.len() as f64;
        if !mean.is_finite() || model.validate().is_err() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        log::debug!("epoch {epoch}: mean loss {mean:.6}");
        per_epoch.push(mean);
    }

    let final_train_loss = mean_loss(&model, &train_pairs, config.margin)?;
    let final_val_loss = if val_pairs.is_empty() {
        None
    } else {
        Some(mean_loss(&model, &val_pairs, config.margin)?)
    };
    Ok((
        model,
        LossTrace {
            per_epoch_mean_loss: per_epoch,
            final_train_loss,
            final_val_loss,
        },
    ))
}

/// A pair given directly by feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub label: Label,
}

fn param_mut(m: &mut ProjectionModel, layer: usize, which: usize, k: usize) -> &mut f64 {
    let layer = &mut m.layers[layer];
    if which == 0 {
        &mut layer.w[k]
    } else {
        &mut layer.b[k]
    }
}

/// Mean pair loss evaluated independently of `embed`/`contrastive_loss`.
///
/// Works on activation differences: the last layer is applied to the
/// penultimate difference and a ReLU unit active for both inputs passes
/// `W * delta`. Biases that cancel analytically then cancel bit-exactly.
fn sample_loss(model: &ProjectionModel, pairs: &[FeaturePair], margin: f64) -> f64 {
    let (last, hidden) = model
        .layers
        .split_last()
        .expect("model has at least one layer");
    let mut total = 0.0;
    for p in pairs {
        let (mut ha, mut hb) = (p.a.clone(), p.b.clone());
        let mut delta: Vec<f64> = ha.iter().zip(&hb).map(|(x, y)| x - y).collect();
        for layer in hidden {
            let za = layer.apply(&ha);
            let zb = layer.apply(&hb);
            let cols = delta.len();
            delta = (0..layer.rows())
                .map(|r| match (za[r] > 0.0, zb[r] > 0.0) {
                    (true, true) => {
                        let row = &layer.w[r * cols..(r + 1) * cols];
                        row.iter().zip(&delta).map(|(w, x)| w * x).sum()
                    }
                    (false, false) => 0.0,
                    _ => za[r].max(0.0) - zb[r].max(0.0),
                })
                .collect();
            ha = za.into_iter().map(|v| v.max(0.0)).collect();
            hb = zb.into_iter().map(|v| v.max(0.0)).collect();
        }
        let cols = delta.len();
        let d2: f64 = (0..last.rows())
            .map(|r| {
                let v: f64 = last.w[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(&delta)
                    .map(|(w, x)| w * x)
                    .sum();
                v * v
            })
            .sum();
        total += match p.label {
            Label::Positive => d2,
            Label::Negative => (margin - d2.sqrt()).max(0.0).powi(2),
        };
    }
    total / pairs.len().max(1) as f64
}

/// Largest relative disagreement between the analytic parameter gradient of
/// the mean pair loss and its central finite difference with step `epsilon`.
/// The denominator is `max(|analytic|, |numeric|, 1e-8)`.
pub fn gradient_check(
    model: &ProjectionModel,
    pairs: &[FeaturePair],
    margin: f64,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::Parameter(format!(
            "epsilon must lie in (0, 1e-3], got {epsilon}"
        )));
    }
    model.validate()?;
    let mut analytic = model.zero_grads();
    for p in pairs {
        for f in [&p.a, &p.b] {
            if f.len() != model.input_dim {
                return Err(Error::Dimension {
                    expected: model.input_dim,
                    actual: f.len(),
                });
            }
        }
        accumulate(model, &p.a, &p.b, p.label, margin, &mut analytic)?;
    }
    let scale = 1.0 / pairs.len().max(1) as f64;

    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (l, grads) in analytic.iter().enumerate() {
        for which in 0..2 {
            let len = if which == 0 {
                grads.w.len()
            } else {
                grads.b.len()
            };
            for k in 0..len {
                let original = *param_mut(&mut probe, l, which, k);
                *param_mut(&mut probe, l, which, k) = original + epsilon;
                let up = sample_loss(&probe, pairs, margin);
                *param_mut(&mut probe, l, which, k) = original - epsilon;
                let down = sample_loss(&probe, pairs, margin);
                *param_mut(&mut probe, l, which, k) = original;
                let numeric = (up - down) / (2.0 * epsilon);
                let exact = scale * if which == 0 { grads.w[k] } else { grads.b[k] };
                let denom = exact.abs().max(numeric.abs()).max(1e-8);
                worst = worst.max((exact - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(w: Vec<f64>, b: Vec<f64>, input_dim: usize) -> ProjectionModel {
        let mut m = ProjectionModel::zeros(input_dim, &[], b.len()).unwrap();
        m.layers[0] = Layer { w, b };
        m
    }

    #[test]
    fn zero_model_embeds_to_zero() {
        let m = ProjectionModel::zeros(3, &[4], 2).unwrap();
        assert_eq!(embed(&m, &[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_is_identity() {
        let m = single(
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            vec![0.0; 3],
            3,
        );
        assert_eq!(embed(&m, &[0.5, -1.0, 2.0]).unwrap(), vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn matches_hand_computed_product() {
        // 3x2 layer: rows (1, 2), (-0.5, 4), (0, 3); bias (0.1, 0.2, -1).
        let m = single(vec![1.0, 2.0, -0.5, 4.0, 0.0, 3.0], vec![0.1, 0.2, -1.0], 2);
        let out = embed(&m, &[2.0, -1.0]).unwrap();
        // 1*2 + 2*-1 + 0.1 = 0.1; -0.5*2 + 4*-1 + 0.2 = -4.8; 0 + 3*-1 - 1 = -4
        let expected = [0.1, -4.8, -4.0];
        for (o, e) in out.iter().zip(expected) {
            assert!((o - e).abs() < 1e-12);
        }
    }

    #[test]
    fn hidden_layer_applies_rectifier() {
        let mut m = ProjectionModel::zeros(1, &[2], 1).unwrap();
        m.layers[0] = Layer {
            w: vec![1.0, -1.0],
            b: vec![0.0, 0.0],
        };
        m.layers[1] = Layer {
            w: vec![1.0, 1.0],
            b: vec![0.0],
        };
        assert_eq!(embed(&m, &[3.0]).unwrap(), vec![3.0]);
        assert_eq!(embed(&m, &[-2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn embed_rejects_wrong_dimension() {
        let m = ProjectionModel::zeros(3, &[], 2).unwrap();
        assert!(matches!(
            embed(&m, &[1.0]),
            Err(Error::Dimension {
                expected: 3,
                actual: 1
            })
        ));
    }

    #[test]
    fn positive_identical_is_zero() {
        let t = contrastive_loss(&[0.3, 0.4], &[0.3, 0.4], Label::Positive, 1.0).unwrap();
        assert_eq!(t.loss, 0.0);
        assert!(t.grad_a.iter().chain(&t.grad_b).all(|g| *g == 0.0));
    }

    #[test]
    fn negative_beyond_margin_is_zero() {
        let t = contrastive_loss(&[0.0, 0.0], &[3.0, 4.0], Label::Negative, 5.0).unwrap();
        assert_eq!(t.loss, 0.0);
        assert!(t.grad_a.iter().chain(&t.grad_b).all(|g| *g == 0.0));
    }

    #[test]
    fn negative_at_zero_distance_has_zero_gradient() {
        let t = contrastive_loss(&[1.0], &[1.0], Label::Negative, 2.0).unwrap();
        assert_eq!(t.loss, 4.0);
        assert_eq!(t.grad_a, vec![0.0]);
    }

    #[test]
    fn positive_one_dimensional_example() {
        let t = contrastive_loss(&[0.0], &[0.5], Label::Positive, 1.0).unwrap();
        assert_eq!(t.loss, 0.25);
        assert_eq!(t.grad_a, vec![-1.0]);
        assert_eq!(t.grad_b, vec![1.0]);
    }

    #[test]
    fn loss_rejects_non_finite() {
        assert!(matches!(
            contrastive_loss(&[f64::NAN], &[0.0], Label::Positive, 1.0),
            Err(Error::Numeric(_))
        ));
    }

    fn random_model(rng: &mut ChaCha8Rng, hidden: &[usize]) -> ProjectionModel {
        ProjectionModel::init(4, hidden, 3, rng.random()).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn gradient_check_zero_model() {
        let m = ProjectionModel::zeros(2, &[], 2).unwrap();
        let pairs = [FeaturePair {
            a: vec![1.0, 2.0],
            b: vec![1.0, 2.0],
            label: Label::Positive,
        }];
        assert_eq!(gradient_check(&m, &pairs, 1.0, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn gradient_check_active_hinge() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_model(&mut rng, &[]);
        let a = random_vec(&mut rng, 4);
        let b = random_vec(&mut rng, 4);
        let d = euclidean(&embed(&m, &a).unwrap(), &embed(&m, &b).unwrap());
        let margin = d * 2.0;
        let pairs = [FeaturePair {
            a,
            b,
            label: Label::Negative,
        }];
        assert!(gradient_check(&m, &pairs, margin, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn gradient_check_flat_region() {
        let m = single(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], 2);
        let pairs = [FeaturePair {
            a: vec![0.0, 0.0],
            b: vec![0.03, 0.04],
            label: Label::Negative,
        }];
        // d = 0.05, margin well below d - eps
        assert_eq!(gradient_check(&m, &pairs, 0.01, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn gradient_check_epsilon_range() {
        let m = ProjectionModel::zeros(1, &[], 1).unwrap();
        assert!(gradient_check(&m, &[], 1.0, 0.0).is_err());
        assert!(gradient_check(&m, &[], 1.0, 1e-2).is_err());
    }

    fn tiny_dataset() -> (BTreeMap<ItemId, Vec<f64>>, PairDataset) {
        let mut f = BTreeMap::new();
        f.insert(ItemId::from("a"), vec![0.0, 1.0]);
        f.insert(ItemId::from("b"), vec![0.0, 1.0]);
        let ds = PairDataset {
            train: vec![Pair::new("a".into(), "b".into(), Label::Positive)],
            validation: vec![],
            test: vec![],
            config: None,
            notes: vec![],
        };
        (f, ds)
    }

    #[test]
    fn zero_epochs_keeps_model() {
        let (f, ds) = tiny_dataset();
        let m = ProjectionModel::init(2, &[], 2, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (out, trace) = train(&m, &f, &ds, &cfg).unwrap();
        assert_eq!(out, m);
        assert!(trace.per_epoch_mean_loss.is_empty());
    }

    #[test]
    fn identical_positive_pair_never_moves() {
        let (f, ds) = tiny_dataset();
        let m = ProjectionModel::init(2, &[3], 2, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let (out, trace) = train(&m, &f, &ds, &cfg).unwrap();
        assert_eq!(out.layers, m.layers);
        assert!(trace.per_epoch_mean_loss.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn empty_train_set_rejected() {
        let (f, mut ds) = tiny_dataset();
        ds.train.clear();
        let m = ProjectionModel::init(2, &[], 2, 3).unwrap();
        assert!(matches!(
            train(&m, &f, &ds, &TrainConfig::default()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn missing_feature_named() {
        let (mut f, ds) = tiny_dataset();
        f.remove(&ItemId::from("b"));
        let m = ProjectionModel::init(2, &[], 2, 3).unwrap();
        match train(&m, &f, &ds, &TrainConfig::default()) {
            Err(Error::MissingFeatures(id)) => assert_eq!(id.as_str(), "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let mut f = BTreeMap::new();
        f.insert(ItemId::from("a"), vec![100.0, -50.0]);
        f.insert(ItemId::from("b"), vec![-80.0, 90.0]);
        let ds = PairDataset {
            train: vec![Pair::new("a".into(), "b".into(), Label::Positive)],
            validation: vec![],
            test: vec![],
            config: None,
            notes: vec![],
        };
        let m = ProjectionModel::init(2, &[], 2, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e6,
            epochs: 50,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&m, &f, &ds, &cfg),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn model_json_roundtrip() {
        let m = ProjectionModel::init(3, &[4], 2, 9).unwrap();
        let back = ProjectionModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bad_model_shape_rejected() {
        let mut m = ProjectionModel::init(3, &[], 2, 9).unwrap();
        m.layers[0].w.pop();
        assert!(ProjectionModel::from_json(&m.to_json().unwrap()).is_err());
    }
}
