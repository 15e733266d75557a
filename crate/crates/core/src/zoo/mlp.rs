//! One-hidden-layer classifier trained with momentum SGD, L2 weight decay,
//! a milestone learning-rate schedule and inverted dropout.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::seed::stream_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("cache does not belong to the current model weights")]
    StaleCache,
    #[error("no training samples")]
    EmptyData,
    #[error("label {label} is out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid training hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("malformed model bytes: {0}")]
    Decode(String),
}

/// Training schedule and regularization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub milestones: Vec<usize>,
    pub decay_factor: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub num_segments: usize,
    pub dropout: f64,
    pub hidden_units: usize,
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.001,
            milestones: vec![20, 40],
            decay_factor: 10.0,
            weight_decay: 5e-4,
            batch_size: 4,
            momentum: 0.9,
            num_segments: 16,
            dropout: 0.5,
            hidden_units: 32,
        }
    }
}

impl TrainHyperparams {
    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |m: &str| Err(MlpError::InvalidHyperparams(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor.is_finite()) {
            return bad("decay_factor must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.hidden_units == 0 || self.num_segments == 0 {
            return bad("batch_size, hidden_units and num_segments must be positive");
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return bad("milestones must be strictly increasing");
        }
        if self.milestones.iter().any(|&m| m >= self.epochs) {
            return bad("every milestone must be below epochs");
        }
        Ok(())
    }
}

/// `base * decay^-m`, where `m` counts the milestones at or before `epoch`.
pub fn lr_at_epoch(base: f64, milestones: &[usize], decay_factor: f64, epoch: usize) -> f64 {
    let passed = milestones.iter().filter(|&&m| m <= epoch).count();
    base / decay_factor.powi(passed as i32)
}

/// Momentum SGD with weight decay folded into the gradient:
/// `v = mu*v + g + wd*w`, then `w -= lr*v`.
pub fn sgd_step(
    weights: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<(), MlpError> {
    if weights.len() != grads.len() || weights.len() != velocity.len() {
        return Err(MlpError::ShapeMismatch(format!(
            "weights {}, grads {}, velocity {}",
            weights.len(),
            grads.len(),
            velocity.len()
        )));
    }
    for ((w, &g), v) in weights.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g + weight_decay * *w;
        *w -= lr * *v;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    /// `hidden x inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `classes x hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients with the same layout as [`MlpModel`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Eval,
}

/// Everything `backward` needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    weights_digest: [u8; 32],
    batch: usize,
    x: Vec<f64>,
    pre_hidden: Vec<f64>,
    /// Per hidden unit: 0 (dropped) or the survivor scale.
    mask: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
    labels: Vec<usize>,
}

pub struct ForwardPass {
    pub loss: f64,
    /// `batch x classes`, row-major.
    pub probs: Vec<f64>,
    pub cache: ForwardCache,
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

impl MlpModel {
    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            inputs,
            hidden,
            classes,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; classes * hidden],
            b2: vec![0.0; classes],
        }
    }

    /// Uniform in `±sqrt(6 / fan_in)` per weight matrix; zero biases.
    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, classes: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(inputs, hidden, classes);
        let a1 = (6.0 / inputs.max(1) as f64).sqrt();
        for w in &mut m.w1 {
            *w = rng.random_range(-a1..=a1);
        }
        let a2 = (6.0 / hidden as f64).sqrt();
        for w in &mut m.w2 {
            *w = rng.random_range(-a2..=a2);
        }
        m
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for part in [&self.w1, &self.b1, &self.w2, &self.b2] {
            for v in part {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }

    fn check_shapes(&self) -> Result<(), MlpError> {
        let ok = self.w1.len() == self.hidden * self.inputs
            && self.b1.len() == self.hidden
            && self.w2.len() == self.classes * self.hidden
            && self.b2.len() == self.classes;
        if ok {
            Ok(())
        } else {
            Err(MlpError::ShapeMismatch("parameter lengths disagree with layer sizes".into()))
        }
    }

    fn logits_row(&self, hidden: &[f64], out: &mut [f64]) {
        for k in 0..self.classes {
            let w = &self.w2[k * self.hidden..(k + 1) * self.hidden];
            out[k] = self.b2[k] + w.iter().zip(hidden).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Forward pass with mean softmax cross-entropy. In train mode each
    /// hidden unit is zeroed with probability `dropout` and survivors are
    /// scaled by `1/(1-dropout)`; eval mode leaves the hidden layer alone.
    pub fn forward_loss<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        labels: &[usize],
        dropout: f64,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<ForwardPass, MlpError> {
        self.check_shapes()?;
        let batch = labels.len();
        if x.len() != batch * self.inputs {
            return Err(MlpError::ShapeMismatch(format!(
                "{} features for a batch of {batch} x {} inputs",
                x.len(),
                self.inputs
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= self.classes) {
            return Err(MlpError::LabelOutOfRange { label, classes: self.classes });
        }
        let mut pre_hidden = vec![0.0; batch * self.hidden];
        let mut mask = vec![1.0; batch * self.hidden];
        let mut hidden = vec![0.0; batch * self.hidden];
        let mut probs = vec![0.0; batch * self.classes];
        let keep_scale = 1.0 / (1.0 - dropout);
        let mut loss = 0.0;
        for b in 0..batch {
            let xb = &x[b * self.inputs..(b + 1) * self.inputs];
            for j in 0..self.hidden {
                let w = &self.w1[j * self.inputs..(j + 1) * self.inputs];
                let z = self.b1[j] + w.iter().zip(xb).map(|(a, c)| a * c).sum::<f64>();
                let idx = b * self.hidden + j;
                pre_hidden[idx] = z;
                if mode == DropoutMode::Train && dropout > 0.0 {
                    mask[idx] = if rng.random::<f64>() < dropout { 0.0 } else { keep_scale };
                }
                hidden[idx] = z.max(0.0) * mask[idx];
            }
            let row = &mut probs[b * self.classes..(b + 1) * self.classes];
            self.logits_row(&hidden[b * self.hidden..(b + 1) * self.hidden], row);
            softmax_in_place(row);
            loss -= row[labels[b]].max(f64::MIN_POSITIVE).ln();
        }
        if batch > 0 {
            loss /= batch as f64;
        }
        Ok(ForwardPass {
            loss,
            probs: probs.clone(),
            cache: ForwardCache {
                weights_digest: self.digest(),
                batch,
                x: x.to_vec(),
                pre_hidden,
                mask,
                hidden,
                probs,
                labels: labels.to_vec(),
            },
        })
    }

    /// Exact gradients of the mean loss from `forward_loss`, using the
    /// dropout mask recorded in the cache.
    pub fn backward(&self, cache: &ForwardCache) -> Result<Gradients, MlpError> {
        if cache.weights_digest != self.digest() {
            return Err(MlpError::StaleCache);
        }
        let (h, k, d) = (self.hidden, self.classes, self.inputs);
        let mut g = Gradients { w1: vec![0.0; h * d], b1: vec![0.0; h], w2: vec![0.0; k * h], b2: vec![0.0; k] };
        if cache.batch == 0 {
            return Ok(g);
        }
        let inv = 1.0 / cache.batch as f64;
        let mut dlogits = vec![0.0; k];
        let mut dhidden = vec![0.0; h];
        for b in 0..cache.batch {
            let probs = &cache.probs[b * k..(b + 1) * k];
            for c in 0..k {
                dlogits[c] = (probs[c] - if c == cache.labels[b] { 1.0 } else { 0.0 }) * inv;
            }
            let hidden = &cache.hidden[b * h..(b + 1) * h];
            dhidden.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..k {
                g.b2[c] += dlogits[c];
                let w2 = &self.w2[c * h..(c + 1) * h];
                let gw2 = &mut g.w2[c * h..(c + 1) * h];
                for j in 0..h {
                    gw2[j] += dlogits[c] * hidden[j];
                    dhidden[j] += dlogits[c] * w2[j];
                }
            }
            let xb = &cache.x[b * d..(b + 1) * d];
            for j in 0..h {
                let idx = b * h + j;
                if cache.pre_hidden[idx] <= 0.0 || cache.mask[idx] == 0.0 {
                    continue;
                }
                let dz = dhidden[j] * cache.mask[idx];
                g.b1[j] += dz;
                let gw1 = &mut g.w1[j * d..(j + 1) * d];
                for (gw, &xv) in gw1.iter_mut().zip(xb) {
                    *gw += dz * xv;
                }
            }
        }
        Ok(g)
    }

    /// Softmax rows in eval mode.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        self.check_shapes()?;
        if self.inputs == 0 || x.len() % self.inputs != 0 {
            return Err(MlpError::ShapeMismatch(format!(
                "{} features are not a multiple of {} inputs",
                x.len(),
                self.inputs
            )));
        }
        let rows = x.len() / self.inputs;
        let mut hidden = vec![0.0; self.hidden];
        let mut out = vec![0.0; rows * self.classes];
        for b in 0..rows {
            let xb = &x[b * self.inputs..(b + 1) * self.inputs];
            for (j, hv) in hidden.iter_mut().enumerate() {
                let w = &self.w1[j * self.inputs..(j + 1) * self.inputs];
                *hv = (self.b1[j] + w.iter().zip(xb).map(|(a, c)| a * c).sum::<f64>()).max(0.0);
            }
            let row = &mut out[b * self.classes..(b + 1) * self.classes];
            self.logits_row(&hidden, row);
            softmax_in_place(row);
        }
        Ok(out)
    }

    /// `u32` layer sizes then `f64` parameters, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.parameter_count());
        for n in [self.inputs, self.hidden, self.classes] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for part in [&self.w1, &self.b1, &self.w2, &self.b2] {
            for v in part {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MlpError> {
        let mut cur = crate::pipeline::Cursor::new(bytes);
        let mut size = || cur.u32().map(|v| v as usize).ok_or_else(|| MlpError::Decode("truncated header".into()));
        let (inputs, hidden, classes) = (size()?, size()?, size()?);
        let mut m = Self::zeros(inputs, hidden, classes);
        let expected = 12 + 8 * m.parameter_count();
        if bytes.len() != expected {
            return Err(MlpError::Decode(format!("{} bytes, expected {expected}", bytes.len())));
        }
        let mut values = bytes[12..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        for part in [&mut m.w1, &mut m.b1, &mut m.w2, &mut m.b2] {
            for v in part.iter_mut() {
                *v = values.next().expect("length checked");
            }
        }
        Ok(m)
    }
}

/// Outcome of [`fit_classifier`].
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: MlpModel,
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

/// Trains from a seed-derived initialization.
pub fn fit_classifier(
    features: &[f64],
    labels: &[usize],
    num_classes: usize,
    hp: &TrainHyperparams,
    seed: u64,
) -> Result<TrainedClassifier, MlpError> {
    if labels.is_empty() {
        return Err(MlpError::EmptyData);
    }
    if features.len() % labels.len() != 0 {
        return Err(MlpError::ShapeMismatch(format!(
            "{} features for {} samples",
            features.len(),
            labels.len()
        )));
    }
    let inputs = features.len() / labels.len();
    let init = MlpModel::init(inputs, hp.hidden_units, num_classes, &mut stream_rng(seed, INIT_STREAM));
    fit_classifier_from(init, features, labels, hp, seed)
}

/// Trains starting from the given weights. Each epoch shuffles the samples,
/// walks them in batches (the last partial batch included) and applies one
/// momentum SGD step per batch at the epoch's scheduled learning rate.
pub fn fit_classifier_from(
    init: MlpModel,
    features: &[f64],
    labels: &[usize],
    hp: &TrainHyperparams,
    seed: u64,
) -> Result<TrainedClassifier, MlpError> {
    hp.validate()?;
    init.check_shapes()?;
    let n = labels.len();
    if n == 0 {
        return Err(MlpError::EmptyData);
    }
    if features.len() != n * init.inputs {
        return Err(MlpError::ShapeMismatch(format!(
            "{} features for {n} samples of {} inputs",
            features.len(),
            init.inputs
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= init.classes) {
        return Err(MlpError::LabelOutOfRange { label, classes: init.classes });
    }

    let mut model = init;
    let mut velocity = Gradients {
        w1: vec![0.0; model.w1.len()],
        b1: vec![0.0; model.b1.len()],
        w2: vec![0.0; model.w2.len()],
        b2: vec![0.0; model.b2.len()],
    };
    let mut shuffle_rng = stream_rng(seed, SHUFFLE_STREAM);
    let mut dropout_rng = stream_rng(seed, DROPOUT_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(hp.epochs);
    let mut xb = Vec::with_capacity(hp.batch_size * model.inputs);
    let mut yb = Vec::with_capacity(hp.batch_size);

    for epoch in 0..hp.epochs {
        let lr = lr_at_epoch(hp.learning_rate, &hp.milestones, hp.decay_factor, epoch);
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in order.chunks(hp.batch_size) {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(&features[i * model.inputs..(i + 1) * model.inputs]);
                yb.push(labels[i]);
            }
            let pass = model.forward_loss(&xb, &yb, hp.dropout, DropoutMode::Train, &mut dropout_rng)?;
            total += pass.loss * chunk.len() as f64;
            let g = model.backward(&pass.cache)?;
            sgd_step(&mut model.w1, &g.w1, &mut velocity.w1, lr, hp.momentum, hp.weight_decay)?;
            sgd_step(&mut model.b1, &g.b1, &mut velocity.b1, lr, hp.momentum, hp.weight_decay)?;
            sgd_step(&mut model.w2, &g.w2, &mut velocity.w2, lr, hp.momentum, hp.weight_decay)?;
            sgd_step(&mut model.b2, &g.b2, &mut velocity.b2, lr, hp.momentum, hp.weight_decay)?;
        }
        epoch_losses.push(total / n as f64);
    }
    Ok(TrainedClassifier { model, epoch_losses })
}
