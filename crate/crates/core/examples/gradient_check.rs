//! Compares backpropagated gradients with central finite differences on
//! small random networks, for both output/loss pairings.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use deep_transform::net::{init_network, LayerSpec};
use deep_transform::rng::RngStream;
use deep_transform::{ActivationKind, LossKind, Network, Result};
use rand::Rng;

const H: f64 = 1e-5;

/// Worst relative error over every parameter of one network.
fn max_relative_error(net: &Network, x: &[f64], t: &[f64], loss: LossKind) -> Result<f64> {
    let grads = net.backward(&net.forward(x)?, t, loss)?;
    let loss_at = |n: &Network| -> Result<f64> { Ok(loss.value(&n.output(x)?, t)) };
    let mut worst: f64 = 0.0;
    for (k, layer) in net.layers().iter().enumerate() {
        let (rows, cols) = (layer.weights().rows(), layer.weights().cols());
        for i in 0..rows {
            for j in 0..=cols {
                let nudged = |delta: f64| -> Result<f64> {
                    let mut layers = net.layers().to_vec();
                    let (mut w, mut b) = (layers[k].weights().clone(), layers[k].bias().to_vec());
                    if j < cols {
                        w.set(i, j, w.get(i, j) + delta);
                    } else {
                        b[i] += delta;
                    }
                    layers[k] = deep_transform::net::Layer::new(w, b, layers[k].activation())?;
                    loss_at(&Network::from_layers(layers)?)
                };
                let numeric = (nudged(H)? - nudged(-H)?) / (2.0 * H);
                let analytic = if j < cols { grads.weights[k].get(i, j) } else { grads.biases[k][i] };
                let scale = numeric.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max((numeric - analytic).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// `(loss, worst relative error)` over `nets` random networks per pairing.
pub fn run_example(nets: u64) -> Result<Vec<(LossKind, f64)>> {
    let mut out = Vec::new();
    for (loss, act) in [
        (LossKind::CrossEntropy, ActivationKind::Softmax),
        (LossKind::MeanSquaredError, ActivationKind::Sigmoid),
    ] {
        let mut worst: f64 = 0.0;
        for seed in 0..nets {
            let mut rng = RngStream::new(seed, 99);
            let (n_in, n_hidden, n_out) = (rng.random_range(2..7), rng.random_range(2..9), rng.random_range(2..6));
            let specs = [
                LayerSpec::new(n_in, n_hidden, ActivationKind::Sigmoid),
                LayerSpec::new(n_hidden, n_out, act),
            ];
            let net = init_network(&specs, seed)?;
            let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t: Vec<f64> = match loss {
                LossKind::CrossEntropy => {
                    let c = rng.random_range(0..n_out);
                    (0..n_out).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
                }
                LossKind::MeanSquaredError => (0..n_out).map(|_| rng.random::<f64>()).collect(),
            };
            worst = worst.max(max_relative_error(&net, &x, &t, loss)?);
        }
        out.push((loss, worst));
    }
    Ok(out)
}

fn main() -> Result<()> {
    for (loss, worst) in run_example(20)? {
        println!("{loss:?}: worst relative error {worst:.3e} over 20 networks");
    }
    Ok(())
}
