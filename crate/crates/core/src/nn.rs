//! Feed-forward classifier: forward pass, softmax, cross-entropy, momentum
//! SGD with epoch-end hooks, evaluation, pool prediction.
//!
//! Hidden layers are rectified-linear, the output layer is identity; the
//! softmax lives outside the network so callers can ask for either space.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::matrix::Matrix;
use crate::seeding;

/// Probability floor inside cross-entropy, avoiding -ln 0.
pub const PROB_CLAMP: f64 = 1e-12;

/// Which output space a prediction lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredSpace {
    Softmax,
    Logit,
}

impl PredSpace {
    pub fn name(self) -> &'static str {
        match self {
            PredSpace::Softmax => "softmax",
            PredSpace::Logit => "logit",
        }
    }
}

/// One dense layer: `weights` is fan_out x fan_in, `biases` has fan_out entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros_like(other: &Layer) -> Layer {
        Layer {
            weights: Matrix::zeros(other.weights.rows(), other.weights.cols()),
            biases: vec![0.0; other.biases.len()],
        }
    }
}

/// Full parameter set of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl ModelParams {
    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.all_finite() && l.biases.iter().all(|v| v.is_finite()))
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid_argument("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid_argument("batch_size must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid_argument(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid_argument(format!(
                "momentum must be in [0,1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Seeded Glorot-uniform initialization: weights uniform in
/// +-sqrt(6 / (fan_in + fan_out)), biases zero.
pub fn init_model(layer_sizes: &[usize], seed: u64) -> Result<ModelParams> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid_argument(format!(
            "need at least input and output dims, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid_argument(format!(
            "layer dims must be >= 1, got {layer_sizes:?}"
        )));
    }
    let mut rng = seeding::rng_from(seed);
    let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = Matrix::from_rows_fn(fan_out, fan_in, |_, row| {
            for v in row.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        });
        layers.push(Layer {
            weights,
            biases: vec![0.0; fan_out],
        });
    }
    Ok(ModelParams {
        layer_sizes: layer_sizes.to_vec(),
        layers,
    })
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_argument("softmax input must be finite"));
    }
    Ok(softmax_unchecked(logits))
}

fn softmax_unchecked(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

/// -ln of the clamped probability assigned to the true label.
pub fn cross_entropy_loss(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::invalid_argument(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    Ok(-probs[label].max(PROB_CLAMP).ln())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_features(model: &ModelParams, features: &Matrix) -> Result<()> {
    if features.rows() > 0 && features.cols() != model.input_dim() {
        return Err(Error::invalid_argument(format!(
            "feature width {} does not match input dim {}",
            features.cols(),
            model.input_dim()
        )));
    }
    Ok(())
}

fn check_labels(model: &ModelParams, features: &Matrix, labels: &[usize]) -> Result<()> {
    check_features(model, features)?;
    if labels.len() != features.rows() {
        return Err(Error::invalid_argument(format!(
            "{} labels for {} rows",
            labels.len(),
            features.rows()
        )));
    }
    let classes = model.num_classes();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::invalid_argument(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    Ok(())
}

/// Activations per layer for one sample: `acts[0]` is the input, the last
/// entry is the logit vector.
fn forward_activations(model: &ModelParams, x: &[f64]) -> Vec<Vec<f64>> {
    let depth = model.layers.len();
    let mut acts = Vec::with_capacity(depth + 1);
    acts.push(x.to_vec());
    for (l, layer) in model.layers.iter().enumerate() {
        let prev = &acts[l];
        let mut z = layer.biases.clone();
        for (j, zj) in z.iter_mut().enumerate() {
            let wrow = layer.weights.row(j);
            let mut acc = 0.0;
            for (wi, xi) in wrow.iter().zip(prev.iter()) {
                acc += wi * xi;
            }
            *zj += acc;
        }
        if l + 1 < depth {
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
        }
        acts.push(z);
    }
    acts
}

fn forward_logits(model: &ModelParams, x: &[f64]) -> Vec<f64> {
    forward_activations(model, x).pop().unwrap()
}

/// Mean cross-entropy over the batch plus parameter gradients of that mean.
pub fn loss_and_gradients(
    model: &ModelParams,
    features: &Matrix,
    labels: &[usize],
) -> Result<(f64, Vec<Layer>)> {
    if features.rows() == 0 {
        return Err(Error::invalid_argument("empty batch"));
    }
    check_labels(model, features, labels)?;

    let m = features.rows() as f64;
    let depth = model.layers.len();
    let mut grads: Vec<Layer> = model.layers.iter().map(Layer::zeros_like).collect();
    let mut loss = 0.0;

    for (r, &label) in labels.iter().enumerate() {
        let acts = forward_activations(model, features.row(r));
        let probs = softmax_unchecked(&acts[depth]);
        loss += cross_entropy_loss(&probs, label)?;

        let mut delta = probs;
        delta[label] -= 1.0;
        for l in (0..depth).rev() {
            let grad = &mut grads[l];
            let below = &acts[l];
            for (j, &dj) in delta.iter().enumerate() {
                let grow = grad.weights.row_mut(j);
                for (g, &a) in grow.iter_mut().zip(below.iter()) {
                    *g += dj * a;
                }
                grad.biases[j] += dj;
            }
            if l > 0 {
                let w = &model.layers[l].weights;
                let mut prev = vec![0.0; below.len()];
                for (j, &dj) in delta.iter().enumerate() {
                    let wrow = w.row(j);
                    for (p, &wji) in prev.iter_mut().zip(wrow.iter()) {
                        *p += wji * dj;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(below.iter()) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    for grad in grads.iter_mut() {
        for v in grad.weights.data_mut() {
            *v /= m;
        }
        for v in grad.biases.iter_mut() {
            *v /= m;
        }
    }
    Ok((loss / m, grads))
}

/// Training state: the model plus momentum velocity that persists across
/// epochs of one run.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: ModelParams,
    velocity: Vec<Layer>,
}

impl Trainer {
    pub fn new(model: ModelParams) -> Trainer {
        let velocity = model.layers.iter().map(Layer::zeros_like).collect();
        Trainer { model, velocity }
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn into_model(self) -> ModelParams {
        self.model
    }

    /// One full pass over the labeled data in a seeded shuffled order,
    /// mini-batches of `cfg.batch_size` (last batch may be short).
    /// Returns the mean per-sample loss of the pass.
    pub fn sgd_epoch(
        &mut self,
        features: &Matrix,
        labels: &[usize],
        cfg: &TrainConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64> {
        cfg.validate()?;
        if features.rows() == 0 {
            return Err(Error::invalid_state("cannot train on an empty labeled set"));
        }
        check_labels(&self.model, features, labels)?;

        let mut order: Vec<usize> = (0..features.rows()).collect();
        order.shuffle(rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = Matrix::from_rows_fn(chunk.len(), features.cols(), |r, row| {
                row.copy_from_slice(features.row(chunk[r]));
            });
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (batch_loss, grads) = loss_and_gradients(&self.model, &batch, &batch_labels)?;
            loss_sum += batch_loss * chunk.len() as f64;

            for ((layer, vel), grad) in self
                .model
                .layers
                .iter_mut()
                .zip(self.velocity.iter_mut())
                .zip(grads.iter())
            {
                for (v, &g) in vel.weights.data_mut().iter_mut().zip(grad.weights.data()) {
                    *v = cfg.momentum * *v + g;
                }
                for (w, &v) in layer.weights.data_mut().iter_mut().zip(vel.weights.data()) {
                    *w -= cfg.learning_rate * v;
                }
                for (v, &g) in vel.biases.iter_mut().zip(grad.biases.iter()) {
                    *v = cfg.momentum * *v + g;
                }
                for (b, &v) in layer.biases.iter_mut().zip(vel.biases.iter()) {
                    *b -= cfg.learning_rate * v;
                }
            }
        }
        Ok(loss_sum / features.rows() as f64)
    }
}

/// Single epoch starting from zero velocity; returns the updated model and
/// the mean per-sample loss.
pub fn sgd_epoch(
    model: ModelParams,
    features: &Matrix,
    labels: &[usize],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(ModelParams, f64)> {
    let mut trainer = Trainer::new(model);
    let loss = trainer.sgd_epoch(features, labels, cfg, rng)?;
    Ok((trainer.into_model(), loss))
}

/// Runs `cfg.epochs` epochs, invoking `epoch_hook` after each with the
/// 1-indexed epoch number and a read-only view of the current model.
/// Returns the trained model and the per-epoch mean losses.
pub fn train<H>(
    model: ModelParams,
    features: &Matrix,
    labels: &[usize],
    cfg: &TrainConfig,
    mut epoch_hook: H,
) -> Result<(ModelParams, Vec<f64>)>
where
    H: FnMut(usize, &ModelParams) -> Result<()>,
{
    cfg.validate()?;
    let mut trainer = Trainer::new(model);
    let mut rng = seeding::rng_from(cfg.seed);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let loss = trainer.sgd_epoch(features, labels, cfg, &mut rng)?;
        losses.push(loss);
        epoch_hook(epoch, trainer.model())?;
    }
    Ok((trainer.into_model(), losses))
}

/// Predictions over a sample matrix, one row per sample, in the requested
/// space. Pure in (model, samples); rows may be computed in parallel.
pub fn predict_pool(model: &ModelParams, samples: &Matrix, space: PredSpace) -> Result<Matrix> {
    check_features(model, samples)?;
    let classes = model.num_classes();
    if samples.rows() == 0 {
        return Ok(Matrix::zeros(0, classes));
    }
    let rows = exec::map_indexed(samples.rows(), |r| {
        let logits = forward_logits(model, samples.row(r));
        match space {
            PredSpace::Logit => logits,
            PredSpace::Softmax => softmax_unchecked(&logits),
        }
    });
    Matrix::from_row_vecs(classes, &rows)
}

/// Fraction of samples whose argmax prediction matches the label.
pub fn evaluate_accuracy(model: &ModelParams, features: &Matrix, labels: &[usize]) -> Result<f64> {
    if features.rows() == 0 {
        return Err(Error::invalid_argument("empty test set"));
    }
    check_labels(model, features, labels)?;
    let hits: Vec<bool> = exec::map_indexed(features.rows(), |r| {
        argmax(&forward_logits(model, features.row(r))) == labels[r]
    });
    let correct = hits.iter().filter(|&&h| h).count();
    Ok(correct as f64 / features.rows() as f64)
}
