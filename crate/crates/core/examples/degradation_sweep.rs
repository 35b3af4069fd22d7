//! Raw and corrected classification error across replacement levels,
//! printed as CSV.
//!
//! With MNIST this trains both full-size networks (tens of minutes on one
//! core) and sweeps 1000 test images; the synthetic fallback uses a narrower
//! autoencoder and fewer passes so it finishes in seconds.
//!
//! ```text
//! cargo run --release --example degradation_sweep -- data/mnist
//! ```

use std::path::Path;

use deep_transform::experiments::{run_sweep, write_csv, SweepConfig, SweepReport};
use deep_transform::mnist::{compute_stats, load_mnist_dir, PIXELS};
use deep_transform::net::{autoencoder_specs, classifier_specs, init_network, LayerSpec};
use deep_transform::resynth::ResynthConfig;
use deep_transform::synthetic::synthetic_digits;
use deep_transform::train::{train, AutoencoderPairs, ClassifierPairs, TrainConfig};
use deep_transform::{ActivationKind, LabeledDataset, Result};

pub struct Setup {
    pub ae_specs: Vec<LayerSpec>,
    pub epochs: usize,
    pub sweep: SweepConfig,
}

pub fn sweep(train_set: &LabeledDataset, test_set: &LabeledDataset, setup: &Setup) -> Result<SweepReport> {
    let stats = compute_stats(train_set)?;
    let clf_cfg = TrainConfig {
        epochs: setup.epochs,
        ..TrainConfig::classifier(1)
    };
    let ae_cfg = TrainConfig {
        epochs: setup.epochs,
        ..TrainConfig::autoencoder(2)
    };
    let log = &mut |r: &deep_transform::train::EpochReport| eprintln!("{r}");
    let clf = train(init_network(&classifier_specs(), 1)?, &ClassifierPairs { data: train_set, stats }, &clf_cfg, log)?;
    let ae = train(init_network(&setup.ae_specs, 2)?, &AutoencoderPairs { data: train_set, stats }, &ae_cfg, log)?;
    let outcome = run_sweep(&clf, &ae, test_set, &stats, &setup.sweep, |row| {
        eprintln!("level {}% done", row.degradation_pct);
    })?;
    Ok(outcome.report)
}

pub fn small_setup(subset: usize, passes: usize, levels: Vec<u32>) -> Setup {
    Setup {
        ae_specs: vec![
            LayerSpec::new(PIXELS, 200, ActivationKind::Sigmoid),
            LayerSpec::new(200, PIXELS, ActivationKind::Sigmoid),
        ],
        epochs: 5,
        sweep: SweepConfig {
            levels,
            subset,
            resynth: ResynthConfig {
                passes,
                ..ResynthConfig::default()
            },
            ..SweepConfig::new(9)
        },
    }
}

pub fn run_example() -> Result<SweepReport> {
    sweep(&synthetic_digits(300, 1), &synthetic_digits(50, 2), &small_setup(50, 10, vec![0, 50, 100]))
}

fn main() -> Result<()> {
    let report = match std::env::args().nth(1) {
        Some(dir) => {
            let (train_set, test_set) = load_mnist_dir(Path::new(&dir))?;
            let setup = Setup {
                ae_specs: autoencoder_specs(),
                epochs: TrainConfig::DEFAULT_EPOCHS,
                sweep: SweepConfig::new(9),
            };
            sweep(&train_set, &test_set, &setup)?
        }
        None => sweep(
            &synthetic_digits(2000, 1),
            &synthetic_digits(200, 2),
            &small_setup(200, 30, deep_transform::experiments::default_levels()),
        )?,
    };
    print!("{}", write_csv(&report));
    Ok(())
}
