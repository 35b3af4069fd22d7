//! Degrades held-out digits at 70% replacement and recovers them by
//! averaging 100 autoencoder passes over fresh secondary degradations.
//!
//! ```text
//! cargo run --release --example resynthesize -- data/mnist
//! ```

use std::path::Path;

use deep_transform::degrade::random_replace;
use deep_transform::mnist::{compute_stats, load_mnist_dir};
use deep_transform::net::{autoencoder_specs, init_network};
use deep_transform::resynth::{resynthesize_one, ResynthConfig};
use deep_transform::synthetic::synthetic_digits;
use deep_transform::train::{train, AutoencoderPairs, TrainConfig};
use deep_transform::{ImageVec, LabeledDataset, Result, RngStream};

fn mean_sq(a: &ImageVec, b: &ImageVec) -> f64 {
    a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.pixels().len() as f64
}

/// Mean squared pixel error against the clean images, `(degraded, resynthesized)`.
pub fn recover(train_set: &LabeledDataset, test_set: &LabeledDataset, epochs: usize) -> Result<(f64, f64)> {
    let stats = compute_stats(train_set)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::autoencoder(3)
    };
    let ae = train(
        init_network(&autoencoder_specs(), cfg.seed)?,
        &AutoencoderPairs { data: train_set, stats },
        &cfg,
        &mut |r| eprintln!("{r}"),
    )?;

    let resynth = ResynthConfig::default();
    let (mut before, mut after) = (0.0, 0.0);
    for (i, clean) in test_set.images().iter().enumerate() {
        let mut rng = RngStream::new(17, i as u64);
        let degraded = random_replace(clean, 0.7, &stats, &mut rng)?;
        let recovered = resynthesize_one(&degraded, &ae, &stats, &resynth, &mut rng)?;
        before += mean_sq(clean, &degraded);
        after += mean_sq(clean, &recovered);
    }
    let n = test_set.len() as f64;
    Ok((before / n, after / n))
}

pub fn run_example() -> Result<(f64, f64)> {
    recover(&synthetic_digits(300, 1), &synthetic_digits(5, 2), 5)
}

fn main() -> Result<()> {
    let (before, after) = match std::env::args().nth(1) {
        Some(dir) => {
            let (train_set, test_set) = load_mnist_dir(Path::new(&dir))?;
            recover(&train_set, &test_set.head(20), TrainConfig::DEFAULT_EPOCHS)?
        }
        None => recover(&synthetic_digits(1000, 1), &synthetic_digits(20, 2), 5)?,
    };
    println!("mean squared pixel error: degraded {before:.4}, re-synthesized {after:.4}");
    Ok(())
}
