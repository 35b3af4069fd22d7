//! Pushes printed-style glyphs through a trained autoencoder with bias
//! correction off, so each comes back in the style of the training digits.
//! Reads and writes PGM files.
//!
//! ```text
//! cargo run --release --example font_transform -- /tmp/font data/mnist
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use deep_transform::experiments::run_font_transform;
use deep_transform::mnist::{compute_stats, load_mnist_dir, read_pgm, write_pgm, PIXELS};
use deep_transform::net::{autoencoder_specs, init_network, LayerSpec};
use deep_transform::resynth::ResynthConfig;
use deep_transform::synthetic::{draw_digit, synthetic_digits};
use deep_transform::train::{train, AutoencoderPairs, TrainConfig};
use deep_transform::{ActivationKind, Error, LabeledDataset, Result, RngStream};

/// Writes `glyph_<d>.pgm` and `glyph_<d>_font.pgm` for d = 0..=9; returns
/// the transformed images.
pub fn transform(train_set: &LabeledDataset, ae_specs: &[LayerSpec], epochs: usize, passes: usize, out: &Path) -> Result<Vec<Vec<u8>>> {
    let stats = compute_stats(train_set)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::autoencoder(8)
    };
    let ae = train(init_network(ae_specs, 8)?, &AutoencoderPairs { data: train_set, stats }, &cfg, &mut |r| eprintln!("{r}"))?;

    fs::create_dir_all(out).map_err(|e| Error::Io { path: out.into(), source: e })?;
    let mut rng = RngStream::new(0, 0);
    let glyphs: Vec<Vec<u8>> = (0..10).map(|d| write_pgm(&draw_digit(d, &mut rng))).collect();
    let resynth = ResynthConfig {
        passes,
        ..ResynthConfig::default()
    };
    let transformed = run_font_transform(&ae, &glyphs, &stats, &resynth, 12)?;
    for (d, (src, dst)) in glyphs.iter().zip(&transformed).enumerate() {
        for (name, bytes) in [(format!("glyph_{d}.pgm"), src), (format!("glyph_{d}_font.pgm"), dst)] {
            let path = out.join(name);
            fs::write(&path, bytes).map_err(|e| Error::Io { path, source: e })?;
        }
        read_pgm(dst)?;
    }
    Ok(transformed)
}

pub fn run_example(out: &Path) -> Result<Vec<Vec<u8>>> {
    let narrow = [
        LayerSpec::new(PIXELS, 100, ActivationKind::Sigmoid),
        LayerSpec::new(100, PIXELS, ActivationKind::Sigmoid),
    ];
    transform(&synthetic_digits(200, 1), &narrow, 3, 10, out)
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("font_transform"), PathBuf::from);
    match args.next() {
        Some(dir) => {
            let (train_set, _) = load_mnist_dir(Path::new(&dir))?;
            transform(&train_set, &autoencoder_specs(), TrainConfig::DEFAULT_EPOCHS, 100, &out)?;
        }
        None => {
            transform(&synthetic_digits(1000, 1), &autoencoder_specs(), 5, 100, &out)?;
        }
    }
    println!("glyphs and their transforms written to {}", out.display());
    Ok(())
}
