//! Trains the 784x100x10 classifier and reports its clean test error.
//!
//! With a directory of the four MNIST IDX files as argument the full sets are
//! used; otherwise a small set of synthetic glyphs stands in.
//!
//! ```text
//! cargo run --release --example train_classifier -- data/mnist
//! ```

use std::path::Path;

use deep_transform::mnist::{compute_stats, load_mnist_dir};
use deep_transform::net::{classifier_specs, init_network, load_checkpoint, save_checkpoint};
use deep_transform::synthetic::synthetic_digits;
use deep_transform::train::{classification_error, train, ClassifierPairs, TrainConfig};
use deep_transform::{LabeledDataset, Result};

pub struct Summary {
    pub final_loss: f64,
    pub test_error: f64,
    pub checkpoint_bytes: usize,
}

pub fn train_and_test(train_set: &LabeledDataset, test_set: &LabeledDataset, epochs: usize, verbose: bool) -> Result<Summary> {
    let stats = compute_stats(train_set)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::classifier(7)
    };
    let init = init_network(&classifier_specs(), cfg.seed)?;
    let mut final_loss = f64::NAN;
    let net = train(init, &ClassifierPairs { data: train_set, stats }, &cfg, &mut |r| {
        final_loss = r.mean_loss;
        if verbose {
            println!("{r}");
        }
    })?;

    let bytes = save_checkpoint(&net);
    assert_eq!(load_checkpoint(&bytes)?, net);
    Ok(Summary {
        final_loss,
        test_error: classification_error(&net, test_set, &stats)?,
        checkpoint_bytes: bytes.len(),
    })
}

pub fn run_example() -> Result<Summary> {
    train_and_test(&synthetic_digits(300, 1), &synthetic_digits(100, 2), 5, false)
}

fn main() -> Result<()> {
    let summary = match std::env::args().nth(1) {
        Some(dir) => {
            let (train_set, test_set) = load_mnist_dir(Path::new(&dir))?;
            train_and_test(&train_set, &test_set, TrainConfig::DEFAULT_EPOCHS, true)?
        }
        None => train_and_test(&synthetic_digits(2000, 1), &synthetic_digits(500, 2), 10, true)?,
    };
    println!("test error {:.4}", summary.test_error);
    println!("checkpoint size {} bytes", summary.checkpoint_bytes);
    Ok(())
}
