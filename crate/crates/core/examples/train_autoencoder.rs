//! Trains the 784x1500x784 autoencoder and measures reconstruction error on
//! held-out images.
//!
//! ```text
//! cargo run --release --example train_autoencoder -- data/mnist
//! ```

use std::path::Path;

use deep_transform::mnist::{compute_stats, load_mnist_dir, to_network_input};
use deep_transform::net::{autoencoder_specs, init_network};
use deep_transform::synthetic::synthetic_digits;
use deep_transform::train::{train, AutoencoderPairs, TrainConfig};
use deep_transform::{LabeledDataset, LossKind, Result};

pub struct Summary {
    pub first_loss: f64,
    pub final_loss: f64,
    /// Mean per-image squared reconstruction loss on the test images.
    pub test_loss: f64,
}

pub fn train_and_test(train_set: &LabeledDataset, test_set: &LabeledDataset, epochs: usize, verbose: bool) -> Result<Summary> {
    let stats = compute_stats(train_set)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::autoencoder(11)
    };
    let init = init_network(&autoencoder_specs(), cfg.seed)?;
    let mut losses = Vec::new();
    let net = train(init, &AutoencoderPairs { data: train_set, stats }, &cfg, &mut |r| {
        losses.push(r.mean_loss);
        if verbose {
            println!("{r}");
        }
    })?;

    let mut total = 0.0;
    for img in test_set.images() {
        let out = net.output(&to_network_input(img, &stats))?;
        total += LossKind::MeanSquaredError.value(&out, img.pixels());
    }
    Ok(Summary {
        first_loss: losses[0],
        final_loss: *losses.last().unwrap(),
        test_loss: total / test_set.len() as f64,
    })
}

pub fn run_example() -> Result<Summary> {
    train_and_test(&synthetic_digits(100, 1), &synthetic_digits(20, 2), 3, false)
}

fn main() -> Result<()> {
    let summary = match std::env::args().nth(1) {
        Some(dir) => {
            let (train_set, test_set) = load_mnist_dir(Path::new(&dir))?;
            train_and_test(&train_set, &test_set.head(1000), TrainConfig::DEFAULT_EPOCHS, true)?
        }
        None => train_and_test(&synthetic_digits(1000, 1), &synthetic_digits(200, 2), 5, true)?,
    };
    println!("held-out reconstruction loss {:.4}", summary.test_loss);
    Ok(())
}
