//! Degrades one digit at several replacement levels and by zeroing the
//! central rectangle, writing each version as a PGM.
//!
//! ```text
//! cargo run --release --example degrade_digits -- /tmp/degraded
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use deep_transform::degrade::{random_replace, region_zero, Rect};
use deep_transform::mnist::write_pgm;
use deep_transform::synthetic::synthetic_digits;
use deep_transform::{Error, Result, RngStream};

pub const LEVELS: [u32; 5] = [0, 25, 50, 75, 100];

/// Writes `level_<pct>.pgm` for each level and `region.pgm`; returns the
/// paths and the number of changed pixels in each image.
pub fn run_example(out_dir: &Path) -> Result<Vec<(PathBuf, usize)>> {
    let digits = synthetic_digits(200, 3);
    let stats = deep_transform::mnist::compute_stats(&digits)?;
    let img = &digits.images()[4];
    fs::create_dir_all(out_dir).map_err(|e| Error::Io { path: out_dir.into(), source: e })?;

    let changed = |a: &[f64], b: &[f64]| a.iter().zip(b).filter(|(x, y)| x != y).count();
    let mut versions = Vec::new();
    for pct in LEVELS {
        let mut rng = RngStream::new(5, u64::from(pct));
        let degraded = random_replace(img, f64::from(pct) / 100.0, &stats, &mut rng)?;
        versions.push((format!("level_{pct:03}.pgm"), degraded));
    }
    versions.push(("region.pgm".into(), region_zero(img, &Rect::central_default())));

    let mut written = Vec::new();
    for (name, degraded) in versions {
        let path = out_dir.join(name);
        fs::write(&path, write_pgm(&degraded)).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        written.push((path, changed(img.pixels(), degraded.pixels())));
    }
    Ok(written)
}

fn main() -> Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("degrade_digits"), PathBuf::from);
    for (path, n) in run_example(&dir)? {
        println!("{}: {n} pixels changed", path.display());
    }
    Ok(())
}
