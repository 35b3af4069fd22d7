//! Feedforward networks: sigmoid hidden layers with additive biases and a
//! sigmoid or softmax output layer.
//!
//! Loss pairings are fixed: softmax output with cross-entropy
//! `-Σ t·ln(o)`, sigmoid output with the squared error `½·Σ (o - t)²`. Both
//! give the output-layer deltas `o - t` and `(o - t)·o·(1 - o)` respectively.

use std::fmt;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::kernel::{
    affine, affine_batch, affine_transpose, affine_transpose_batch, outer_accumulate, outer_batch,
    Matrix, Vector,
};
use crate::rng::{derive_seed, RngStream};

const CHECKPOINT_VERSION: &str = "DTNET1";
const INIT_DOMAIN: u64 = 0x1417;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Sigmoid,
    Softmax,
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Softmax => "softmax",
        })
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "softmax" => Ok(ActivationKind::Softmax),
            other => Err(Error::Format(format!("unknown activation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Cross-entropy; requires a softmax output.
    CrossEntropy,
    /// `½·Σ (o - t)²`; requires a sigmoid output.
    MeanSquaredError,
}

impl LossKind {
    fn output_activation(self) -> ActivationKind {
        match self {
            LossKind::CrossEntropy => ActivationKind::Softmax,
            LossKind::MeanSquaredError => ActivationKind::Sigmoid,
        }
    }

    pub fn value(self, output: &[f64], target: &[f64]) -> f64 {
        match self {
            LossKind::CrossEntropy => -output
                .iter()
                .zip(target)
                .filter(|(_, &t)| t != 0.0)
                .map(|(&o, &t)| t * o.ln())
                .sum::<f64>(),
            LossKind::MeanSquaredError => {
                0.5 * output.iter().zip(target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: ActivationKind,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: ActivationKind) -> Self {
        LayerSpec {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// `784 → 100 (sigmoid) → 10 (softmax)`.
pub fn classifier_specs() -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(784, 100, ActivationKind::Sigmoid),
        LayerSpec::new(100, 10, ActivationKind::Softmax),
    ]
}

/// `784 → 1500 (sigmoid) → 784 (sigmoid)`.
pub fn autoencoder_specs() -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(784, 1500, ActivationKind::Sigmoid),
        LayerSpec::new(1500, 784, ActivationKind::Sigmoid),
    ]
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::shape("network", "no layers", "at least one layer"));
    }
    for (k, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(Error::shape("network", format!("layer {k} {}x{}", s.in_dim, s.out_dim), "non-zero dims"));
        }
        if s.activation == ActivationKind::Softmax && k + 1 != specs.len() {
            return Err(Error::Config(format!("softmax on hidden layer {k}")));
        }
    }
    for (k, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::shape(
                "network",
                format!("layer {k} out_dim {}", pair[0].out_dim),
                format!("layer {} in_dim {}", k + 1, pair[1].in_dim),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Matrix,
    bias: Vec<f64>,
    activation: ActivationKind,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape(
                "layer",
                format!("weights {}x{}", weights.rows(), weights.cols()),
                format!("bias of length {}", bias.len()),
            ));
        }
        if weights.as_slice().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("layer parameters".into()));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.weights.cols(), self.weights.rows(), self.activation)
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Matrix, &mut Vec<f64>) {
        (&mut self.weights, &mut self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Post-activation values of every layer, input first.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vector>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds the input at least")
    }

    pub fn activations(&self) -> &[Vector] {
        &self.activations
    }
}

/// Per-layer parameter gradients, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()).expect("layer dims are non-zero"))
                .collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice())
            .chain(self.biases.iter().flatten())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn apply_activation(kind: ActivationKind, z: &mut [f64]) {
    match kind {
        ActivationKind::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
        ActivationKind::Softmax => softmax_in_place(z),
    }
}

/// `e^(z_i - max z) / Σ e^(z_j - max z)`
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn check_finite(values: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(what()))
    }
}

/// Glorot-uniform weights in `[-r, r]`, `r = sqrt(6 / (in + out))`; zero biases.
pub fn init_network(specs: &[LayerSpec], seed: u64) -> Result<Network> {
    validate_specs(specs)?;
    let mut rng = RngStream::new(derive_seed(seed, INIT_DOMAIN, 0), 0);
    let layers = specs
        .iter()
        .map(|s| {
            let r = (6.0 / (s.in_dim + s.out_dim) as f64).sqrt();
            let dist = Uniform::new_inclusive(-r, r).expect("finite bound");
            let data = (0..s.in_dim * s.out_dim).map(|_| dist.sample(&mut rng)).collect();
            Layer::new(Matrix::from_vec(s.out_dim, s.in_dim, data)?, vec![0.0; s.out_dim], s.activation)
        })
        .collect::<Result<_>>()?;
    Ok(Network { layers })
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let specs: Vec<_> = layers.iter().map(Layer::spec).collect();
        validate_specs(&specs)?;
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.rows()
    }

    pub fn output_activation(&self) -> ActivationKind {
        self.layers.last().expect("non-empty").activation
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(
                "forward",
                format!("network input dim {}", self.input_dim()),
                format!("input of length {}", x.len()),
            ));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(Vector::from(x));
        for (k, layer) in self.layers.iter().enumerate() {
            let prev = activations.last().expect("non-empty");
            let mut z = affine(&layer.weights, prev, &layer.bias)?;
            apply_activation(layer.activation, &mut z);
            check_finite(&z, || format!("forward output of layer {k}"))?;
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Network output only.
    pub fn output(&self, x: &[f64]) -> Result<Vector> {
        let mut cache = self.forward(x)?;
        Ok(cache.activations.pop().expect("non-empty"))
    }

    /// Forward pass over `xs.len() / input_dim` samples stored back to back.
    /// Bit-identical to calling [`Network::output`] on each sample.
    pub fn forward_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let n = self.input_dim();
        if xs.len() % n != 0 {
            return Err(Error::shape(
                "forward_batch",
                format!("network input dim {n}"),
                format!("batch buffer of length {}", xs.len()),
            ));
        }
        let batch = xs.len() / n;
        let mut cur = xs.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            let rows = layer.weights.rows();
            let mut next = vec![0.0; batch * rows];
            affine_batch(&layer.weights, &layer.bias, &cur, &mut next);
            for sample in next.chunks_exact_mut(rows) {
                apply_activation(layer.activation, sample);
            }
            check_finite(&next, || format!("forward output of layer {k}"))?;
            cur = next;
        }
        Ok(cur)
    }

    pub fn backward(&self, cache: &ForwardCache, target: &[f64], loss: LossKind) -> Result<Gradients> {
        self.check_loss(loss)?;
        if cache.activations.len() != self.layers.len() + 1
            || cache.activations.iter().zip(self.layer_widths()).any(|(a, w)| a.len() != w)
        {
            return Err(Error::shape("backward", "forward cache", "this network's layer widths"));
        }
        let output = cache.output();
        if target.len() != output.len() {
            return Err(Error::shape(
                "backward",
                format!("output of length {}", output.len()),
                format!("target of length {}", target.len()),
            ));
        }

        let mut grads = Gradients::zeros_like(self);
        let mut delta: Vec<f64> = output_delta(loss, output, target).collect();
        for k in (0..self.layers.len()).rev() {
            let input = &cache.activations[k];
            outer_accumulate(&mut grads.weights[k], &delta, input, 1.0)?;
            grads.biases[k].copy_from_slice(&delta);
            if k > 0 {
                let mut back = affine_transpose(&self.layers[k].weights, &delta)?;
                for (d, &a) in back.iter_mut().zip(input.iter()) {
                    *d *= a * (1.0 - a);
                }
                delta = back.into_inner();
            }
        }
        Ok(grads)
    }

    /// Mean gradient over a mini-batch, written into `grads`; returns the summed loss.
    pub(crate) fn batch_gradients(
        &self,
        inputs: &[f64],
        targets: &[f64],
        loss: LossKind,
        ws: &mut BatchWorkspace,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let batch = inputs.len() / self.input_dim();
        let scale = 1.0 / batch as f64;
        ws.activations.resize_with(self.layers.len() + 1, Vec::new);
        ws.activations[0].clear();
        ws.activations[0].extend_from_slice(inputs);
        for (k, layer) in self.layers.iter().enumerate() {
            let rows = layer.weights.rows();
            let (done, rest) = ws.activations.split_at_mut(k + 1);
            let out = &mut rest[0];
            out.resize(batch * rows, 0.0);
            affine_batch(&layer.weights, &layer.bias, &done[k], out);
            for sample in out.chunks_exact_mut(rows) {
                apply_activation(layer.activation, sample);
            }
        }

        let output = &ws.activations[self.layers.len()];
        let out_dim = self.output_dim();
        let mut total_loss = 0.0;
        ws.delta.clear();
        for (o, t) in output.chunks_exact(out_dim).zip(targets.chunks_exact(out_dim)) {
            total_loss += loss.value(o, t);
            ws.delta.extend(output_delta(loss, o, t));
        }
        if !total_loss.is_finite() {
            return Ok(total_loss);
        }

        for k in (0..self.layers.len()).rev() {
            let rows = self.layers[k].weights.rows();
            let input = &ws.activations[k];
            outer_batch(&mut grads.weights[k], &ws.delta, input, scale);
            let gb = &mut grads.biases[k];
            gb.fill(0.0);
            for d in ws.delta.chunks_exact(rows) {
                for (g, &di) in gb.iter_mut().zip(d) {
                    *g += scale * di;
                }
            }
            if k > 0 {
                ws.back.resize(input.len(), 0.0);
                affine_transpose_batch(&self.layers[k].weights, &ws.delta, &mut ws.back);
                for (d, &a) in ws.back.iter_mut().zip(input.iter()) {
                    *d *= a * (1.0 - a);
                }
                std::mem::swap(&mut ws.delta, &mut ws.back);
            }
        }
        Ok(total_loss)
    }

    fn layer_widths(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.weights.rows()))
    }

    pub(crate) fn check_loss(&self, loss: LossKind) -> Result<()> {
        if self.output_activation() != loss.output_activation() {
            return Err(Error::Config(format!(
                "{loss:?} loss requires a {} output layer, network has {}",
                loss.output_activation(),
                self.output_activation()
            )));
        }
        Ok(())
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.output(x)?))
    }
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

fn output_delta<'a>(loss: LossKind, output: &'a [f64], target: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    output.iter().zip(target).map(move |(&o, &t)| match loss {
        LossKind::CrossEntropy => o - t,
        LossKind::MeanSquaredError => (o - t) * o * (1.0 - o),
    })
}

/// Scratch buffers reused across mini-batches.
#[derive(Debug, Default)]
pub(crate) struct BatchWorkspace {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    back: Vec<f64>,
}

impl BatchWorkspace {
    /// Outputs of the last [`Network::batch_gradients`] call.
    pub(crate) fn output(&self) -> &[f64] {
        self.activations.last().map_or(&[], Vec::as_slice)
    }
}

/// Serializes to the `DTNET1` text format: version line, layer count, then per
/// layer a header `in out activation` followed by one line per output unit
/// holding that unit's weights and bias, each real with 17 significant digits.
pub fn save_checkpoint(net: &Network) -> Vec<u8> {
    use std::fmt::Write;

    let mut s = String::new();
    writeln!(s, "{CHECKPOINT_VERSION}").unwrap();
    writeln!(s, "{}", net.layers.len()).unwrap();
    for layer in &net.layers {
        let spec = layer.spec();
        writeln!(s, "{} {} {}", spec.in_dim, spec.out_dim, spec.activation).unwrap();
        for i in 0..spec.out_dim {
            for (j, w) in layer.weights.row(i).iter().chain(std::iter::once(&layer.bias[i])).enumerate() {
                if j > 0 {
                    s.push(' ');
                }
                write!(s, "{w:.16e}").unwrap();
            }
            s.push('\n');
        }
    }
    s.into_bytes()
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<Network> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Format("checkpoint is not UTF-8".into()))?;
    let mut lines = text.lines();
    let mut next_line = |what: &str| lines.next().ok_or_else(|| Error::Format(format!("checkpoint truncated before {what}")));

    let version = next_line("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("checkpoint version {version:?}, expected {CHECKPOINT_VERSION}")));
    }
    let count: usize = parse_field(next_line("layer count")?.trim(), "layer count")?;
    if count == 0 {
        return Err(Error::Format("checkpoint declares zero layers".into()));
    }
    let mut layers = Vec::with_capacity(count);
    for k in 0..count {
        let header = next_line("layer header")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [in_dim, out_dim, act] = fields[..] else {
            return Err(Error::Format(format!("layer {k} header {header:?}")));
        };
        let in_dim: usize = parse_field(in_dim, "in_dim")?;
        let out_dim: usize = parse_field(out_dim, "out_dim")?;
        let activation: ActivationKind = act.parse()?;
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Format(format!("layer {k} has zero dimension")));
        }
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        let mut bias = Vec::with_capacity(out_dim);
        for i in 0..out_dim {
            let row = next_line("weight row")?;
            let mut n = 0;
            for tok in row.split_whitespace() {
                let v: f64 = parse_field(tok, "real")?;
                if !v.is_finite() {
                    return Err(Error::Format(format!("non-finite value in layer {k} row {i}")));
                }
                if n < in_dim {
                    weights.push(v);
                } else {
                    bias.push(v);
                }
                n += 1;
            }
            if n != in_dim + 1 {
                return Err(Error::Format(format!("layer {k} row {i} has {n} values, expected {}", in_dim + 1)));
            }
        }
        layers.push(Layer::new(Matrix::from_vec(out_dim, in_dim, weights)?, bias, activation)?);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::Format("trailing data after last layer".into()));
    }
    Network::from_layers(layers).map_err(|e| Error::Format(e.to_string()))
}

fn parse_field<T: FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Format(format!("bad {what} {tok:?}")))
}
