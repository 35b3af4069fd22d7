//! Seeded mini-batch SGD and classification error.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Vector;
use crate::mnist::{to_network_input, DatasetStats, LabeledDataset, CLASSES, PIXELS};
use crate::net::{argmax, BatchWorkspace, Gradients, LossKind, Network};
use crate::rng::{derive_seed, RngStream};

const SHUFFLE_DOMAIN: u64 = 0x5_4FF1E;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossKind,
}

impl TrainConfig {
    pub const DEFAULT_EPOCHS: usize = 10;
    pub const DEFAULT_BATCH: usize = 10;
    pub const CLASSIFIER_LR: f64 = 0.1;
    pub const AUTOENCODER_LR: f64 = 0.5;

    pub fn classifier(seed: u64) -> Self {
        TrainConfig {
            epochs: Self::DEFAULT_EPOCHS,
            learning_rate: Self::CLASSIFIER_LR,
            batch_size: Self::DEFAULT_BATCH,
            seed,
            loss: LossKind::CrossEntropy,
        }
    }

    pub fn autoencoder(seed: u64) -> Self {
        TrainConfig {
            learning_rate: Self::AUTOENCODER_LR,
            loss: LossKind::MeanSquaredError,
            ..Self::classifier(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Indexed (input, target) pairs, materialized one example at a time.
pub trait TrainingPairs: Sync {
    fn len(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn write_example(&self, index: usize, input: &mut [f64], target: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Zero-mean images with one-hot class targets.
pub struct ClassifierPairs<'a> {
    pub data: &'a LabeledDataset,
    pub stats: DatasetStats,
}

impl TrainingPairs for ClassifierPairs<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn input_dim(&self) -> usize {
        PIXELS
    }

    fn target_dim(&self) -> usize {
        CLASSES
    }

    fn write_example(&self, index: usize, input: &mut [f64], target: &mut [f64]) {
        let img = &self.data.images()[index];
        for (x, p) in input.iter_mut().zip(img.pixels()) {
            *x = p - self.stats.mean;
        }
        target.fill(0.0);
        target[self.data.labels()[index] as usize] = 1.0;
    }
}

/// Zero-mean images as inputs, the same images on the `[0,1]` scale as targets.
pub struct AutoencoderPairs<'a> {
    pub data: &'a LabeledDataset,
    pub stats: DatasetStats,
}

impl TrainingPairs for AutoencoderPairs<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn input_dim(&self) -> usize {
        PIXELS
    }

    fn target_dim(&self) -> usize {
        PIXELS
    }

    fn write_example(&self, index: usize, input: &mut [f64], target: &mut [f64]) {
        let img = self.data.images()[index].pixels();
        for ((x, t), p) in input.iter_mut().zip(target.iter_mut()).zip(img) {
            *x = p - self.stats.mean;
            *t = *p;
        }
    }
}

/// Explicit vector pairs.
pub struct VectorPairs {
    pub inputs: Vec<Vector>,
    pub targets: Vec<Vector>,
}

impl TrainingPairs for VectorPairs {
    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, |v| v.len())
    }

    fn target_dim(&self) -> usize {
        self.targets.first().map_or(0, |v| v.len())
    }

    fn write_example(&self, index: usize, input: &mut [f64], target: &mut [f64]) {
        input.copy_from_slice(&self.inputs[index]);
        target.copy_from_slice(&self.targets[index]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Running training classification error; `None` for the autoencoder.
    pub train_error: Option<f64>,
}

impl fmt::Display for EpochReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch {} loss {:.6} err", self.epoch, self.mean_loss)?;
        if let Some(e) = self.train_error {
            write!(f, " {e:.6}")?;
        }
        Ok(())
    }
}

/// The example order for one epoch: a Fisher–Yates shuffle of `0..n`.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut RngStream::new(derive_seed(seed, SHUFFLE_DOMAIN, 0), epoch as u64));
    order
}

/// Trains `net` in place of a copy and returns it. `progress` receives one
/// report per epoch.
pub fn train(
    mut net: Network,
    data: &dyn TrainingPairs,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochReport),
) -> Result<Network> {
    cfg.validate()?;
    net.check_loss(cfg.loss)?;
    if data.is_empty() {
        return Err(Error::Degenerate("no training examples".into()));
    }
    if data.input_dim() != net.input_dim() || data.target_dim() != net.output_dim() {
        return Err(Error::shape(
            "train",
            format!("network {}→{}", net.input_dim(), net.output_dim()),
            format!("examples {}→{}", data.input_dim(), data.target_dim()),
        ));
    }

    let (in_dim, out_dim) = (data.input_dim(), data.target_dim());
    let mut grads = Gradients::zeros_like(&net);
    let mut ws = BatchWorkspace::default();
    let mut inputs = vec![0.0; cfg.batch_size * in_dim];
    let mut targets = vec![0.0; cfg.batch_size * out_dim];

    for epoch in 1..=cfg.epochs {
        let order = epoch_order(data.len(), cfg.seed, epoch);
        let mut loss_sum = 0.0;
        let mut misses = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let n = batch.len();
            for (k, &idx) in batch.iter().enumerate() {
                data.write_example(
                    idx,
                    &mut inputs[k * in_dim..(k + 1) * in_dim],
                    &mut targets[k * out_dim..(k + 1) * out_dim],
                );
            }
            let (xs, ts) = (&inputs[..n * in_dim], &targets[..n * out_dim]);
            let batch_loss = net.batch_gradients(xs, ts, cfg.loss, &mut ws, &mut grads)?;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: batch_loss,
                });
            }
            loss_sum += batch_loss;
            if cfg.loss == LossKind::CrossEntropy {
                misses += ws
                    .output()
                    .chunks_exact(out_dim)
                    .zip(ts.chunks_exact(out_dim))
                    .filter(|(o, t)| argmax(o) != argmax(t))
                    .count();
            }
            apply_update(&mut net, &grads, cfg.learning_rate);
            if !parameters_finite(&net) {
                return Err(Error::Divergence {
                    epoch,
                    loss: f64::NAN,
                });
            }
        }

        let report = EpochReport {
            epoch,
            mean_loss: loss_sum / data.len() as f64,
            train_error: (cfg.loss == LossKind::CrossEntropy).then(|| misses as f64 / data.len() as f64),
        };
        if !report.mean_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: report.mean_loss,
            });
        }
        progress(&report);
    }
    Ok(net)
}

fn parameters_finite(net: &Network) -> bool {
    net.layers()
        .iter()
        .all(|l| l.weights().as_slice().iter().chain(l.bias()).all(|v| v.is_finite()))
}

/// `W ← W − lr·G`, `b ← b − lr·g` for every layer.
pub fn apply_update(net: &mut Network, grads: &Gradients, lr: f64) {
    for (k, layer) in net.layers_mut().iter_mut().enumerate() {
        let (w, b) = layer.params_mut();
        for (wi, gi) in w.as_mut_slice().iter_mut().zip(grads.weights[k].as_slice()) {
            *wi -= lr * gi;
        }
        for (bi, gi) in b.iter_mut().zip(&grads.biases[k]) {
            *bi -= lr * gi;
        }
    }
}

fn check_classifier(net: &Network) -> Result<()> {
    if net.input_dim() != PIXELS || net.output_dim() != CLASSES {
        return Err(Error::Config(format!(
            "expected a {PIXELS}→…→{CLASSES} classifier, got {}→…→{}",
            net.input_dim(),
            net.output_dim()
        )));
    }
    Ok(())
}

/// Fraction of images whose predicted class differs from the label.
pub fn classification_error(net: &Network, data: &LabeledDataset, stats: &DatasetStats) -> Result<f64> {
    let inputs: Vec<Vector> = data.images().par_iter().map(|img| to_network_input(img, stats)).collect();
    classification_error_vectors(net, &inputs, data.labels())
}

/// Classification error for ready-made network inputs.
pub fn classification_error_vectors(net: &Network, inputs: &[Vector], labels: &[u8]) -> Result<f64> {
    check_classifier(net)?;
    if inputs.is_empty() {
        return Err(Error::Degenerate("empty evaluation set".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::shape(
            "classification_error",
            format!("{} inputs", inputs.len()),
            format!("{} labels", labels.len()),
        ));
    }
    let misses = inputs
        .par_iter()
        .zip(labels.par_iter())
        .map(|(x, &l)| net.predict_class(x).map(|c| usize::from(c != l as usize)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(misses as f64 / inputs.len() as f64)
}
