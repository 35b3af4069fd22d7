//! Zeroes the central 10x10 block of each test digit and compares the
//! classifier's error on the damaged and on the re-synthesized images.
//! Writes original / damaged / recovered PGM triples for the first few.
//!
//! ```text
//! cargo run --release --example region_recovery -- /tmp/region data/mnist
//! ```

use std::path::{Path, PathBuf};

use deep_transform::degrade::Rect;
use deep_transform::experiments::{dump_grid, run_region_experiment, RegionOutcome};
use deep_transform::mnist::{compute_stats, load_mnist_dir, PIXELS};
use deep_transform::net::{autoencoder_specs, classifier_specs, init_network, LayerSpec};
use deep_transform::resynth::ResynthConfig;
use deep_transform::synthetic::synthetic_digits;
use deep_transform::train::{train, AutoencoderPairs, ClassifierPairs, TrainConfig};
use deep_transform::{ActivationKind, LabeledDataset, Result};

pub fn recover(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    ae_specs: &[LayerSpec],
    epochs: usize,
    passes: usize,
    dump: Option<&Path>,
) -> Result<RegionOutcome> {
    let stats = compute_stats(train_set)?;
    let log = &mut |r: &deep_transform::train::EpochReport| eprintln!("{r}");
    let clf_cfg = TrainConfig {
        epochs,
        ..TrainConfig::classifier(4)
    };
    let ae_cfg = TrainConfig {
        epochs,
        ..TrainConfig::autoencoder(5)
    };
    let clf = train(init_network(&classifier_specs(), 4)?, &ClassifierPairs { data: train_set, stats }, &clf_cfg, log)?;
    let ae = train(init_network(ae_specs, 5)?, &AutoencoderPairs { data: train_set, stats }, &ae_cfg, log)?;
    let cfg = ResynthConfig {
        passes,
        ..ResynthConfig::default()
    };
    let outcome = run_region_experiment(&clf, &ae, test_set, &stats, &Rect::central_default(), &cfg, 6)?;
    if let Some(dir) = dump {
        let grid = outcome.grid();
        dump_grid(dir, "region", &grid[..grid.len().min(8)])?;
    }
    Ok(outcome)
}

pub fn narrow_autoencoder() -> Vec<LayerSpec> {
    vec![
        LayerSpec::new(PIXELS, 200, ActivationKind::Sigmoid),
        LayerSpec::new(200, PIXELS, ActivationKind::Sigmoid),
    ]
}

pub fn run_example(dump: Option<&Path>) -> Result<RegionOutcome> {
    recover(&synthetic_digits(300, 1), &synthetic_digits(40, 2), &narrow_autoencoder(), 5, 10, dump)
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("region_recovery"), PathBuf::from);
    let outcome = match args.next() {
        Some(dir) => {
            let (train_set, test_set) = load_mnist_dir(Path::new(&dir))?;
            recover(&train_set, &test_set.head(500), &autoencoder_specs(), TrainConfig::DEFAULT_EPOCHS, 100, Some(&out))?
        }
        None => recover(&synthetic_digits(2000, 1), &synthetic_digits(200, 2), &narrow_autoencoder(), 5, 30, Some(&out))?,
    };
    println!("error with the block zeroed {:.4}", outcome.err_degraded);
    println!("error after re-synthesis   {:.4}", outcome.err_corrected);
    println!("image triples in {}", out.display());
    Ok(())
}
