//! The three recovery experiments: the degradation sweep, region removal and
//! glyph transformation, plus their CSV, manifest and PGM outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::degrade::{random_replace, region_zero, Rect};
use crate::error::{Error, Result};
use crate::kernel::Vector;
use crate::mnist::{read_pgm, to_network_input, write_pgm, DatasetStats, ImageVec, LabeledDataset};
use crate::net::Network;
use crate::resynth::{bias_correct, check_autoencoder, resynthesize_dataset, ResynthConfig};
use crate::rng::{derive_seed, RngStream};
use crate::train::classification_error_vectors;

const DEGRADE_DOMAIN: u64 = 0xDE6;
const RESYNTH_DOMAIN: u64 = 0x5E5;
const REGION_DOMAIN: u64 = 0x2E6;
const FONT_DOMAIN: u64 = 0xF0;

/// Degradation levels 0, 10, …, 100 percent.
pub fn default_levels() -> Vec<u32> {
    (0..=10).map(|k| k * 10).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub degradation_pct: u32,
    pub err_raw: f64,
    pub err_corrected: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn row(&self, pct: u32) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.degradation_pct == pct)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub levels: Vec<u32>,
    pub subset: usize,
    pub resynth: ResynthConfig,
    pub seed: u64,
    /// Subtract the dataset mean again from bias-corrected vectors before
    /// classifying them. Off by default: bias correction already centres them.
    pub recenter_corrected: bool,
    /// Keep degraded and re-synthesized images of the first `dump` test images.
    pub dump: usize,
}

impl SweepConfig {
    pub const DEFAULT_SUBSET: usize = 1000;

    pub fn new(seed: u64) -> Self {
        SweepConfig {
            levels: default_levels(),
            subset: Self::DEFAULT_SUBSET,
            resynth: ResynthConfig::default(),
            seed,
            recenter_corrected: false,
            dump: 0,
        }
    }

    pub fn validate(&self, test_len: usize) -> Result<()> {
        self.resynth.validate()?;
        if self.subset == 0 || self.subset > 10_000 || self.subset > test_len {
            return Err(Error::Config(format!(
                "subset {} must lie in 1..={}",
                self.subset,
                test_len.min(10_000)
            )));
        }
        if let Some(l) = self.levels.iter().find(|&&l| l > 100 || l % 10 != 0) {
            return Err(Error::Config(format!("degradation level {l} is not on the 10% grid")));
        }
        Ok(())
    }

    /// Record of every setting, for the run manifest.
    pub fn manifest_entries(&self, m: &mut RunManifest) {
        m.set("seed", self.seed);
        m.set("generator", crate::rng::GENERATOR_ID);
        m.set("levels", self.levels.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
        m.set("subset", self.subset);
        m.set("passes", self.resynth.passes);
        m.set("secondary_p", self.resynth.secondary_p);
        m.set("bias_correction", self.resynth.bias_correction);
        m.set("recenter_corrected", self.recenter_corrected);
    }
}

/// Images kept for one sweep level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDump {
    pub degradation_pct: u32,
    pub degraded: Vec<ImageVec>,
    pub resynthesized: Vec<ImageVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub report: SweepReport,
    pub dumps: Vec<LevelDump>,
}

/// Turns re-synthesized images into classifier inputs.
fn classifier_inputs(resynth: &[ImageVec], stats: &DatasetStats, cfg: &ResynthConfig, recenter: bool) -> Result<Vec<Vector>> {
    if cfg.bias_correction {
        let mut v = bias_correct(resynth)?;
        if recenter {
            for x in &mut v {
                x.iter_mut().for_each(|p| *p -= stats.mean);
            }
        }
        Ok(v)
    } else {
        Ok(resynth.iter().map(|img| to_network_input(img, stats)).collect())
    }
}

fn degrade_level(images: &[ImageVec], p: f64, stats: &DatasetStats, seed: u64) -> Result<Vec<ImageVec>> {
    images
        .par_iter()
        .enumerate()
        .map(|(i, img)| random_replace(img, p, stats, &mut RngStream::new(seed, i as u64)))
        .collect()
}

/// Raw and corrected classification error at every degradation level, over
/// the first `cfg.subset` test images.
pub fn run_sweep(
    classifier: &Network,
    autoencoder: &Network,
    test: &LabeledDataset,
    stats: &DatasetStats,
    cfg: &SweepConfig,
    mut progress: impl FnMut(&SweepRow),
) -> Result<SweepOutcome> {
    cfg.validate(test.len())?;
    check_autoencoder(autoencoder)?;
    let subset = test.head(cfg.subset);
    let mut levels = cfg.levels.clone();
    levels.sort_unstable();
    levels.dedup();

    let mut rows = Vec::with_capacity(levels.len());
    let mut dumps = Vec::new();
    for &pct in &levels {
        let p = f64::from(pct) / 100.0;
        let degraded = degrade_level(subset.images(), p, stats, derive_seed(cfg.seed, DEGRADE_DOMAIN, pct.into()))?;
        let raw_inputs: Vec<Vector> = degraded.iter().map(|img| to_network_input(img, stats)).collect();
        let err_raw = classification_error_vectors(classifier, &raw_inputs, subset.labels())?;

        let resynth = resynthesize_dataset(
            &degraded,
            autoencoder,
            stats,
            &cfg.resynth,
            derive_seed(cfg.seed, RESYNTH_DOMAIN, pct.into()),
        )?;
        let corrected = classifier_inputs(&resynth, stats, &cfg.resynth, cfg.recenter_corrected)?;
        let err_corrected = classification_error_vectors(classifier, &corrected, subset.labels())?;

        let row = SweepRow {
            degradation_pct: pct,
            err_raw,
            err_corrected,
        };
        progress(&row);
        rows.push(row);
        if cfg.dump > 0 {
            let k = cfg.dump.min(degraded.len());
            dumps.push(LevelDump {
                degradation_pct: pct,
                degraded: degraded[..k].to_vec(),
                resynthesized: resynth[..k].to_vec(),
            });
        }
    }
    Ok(SweepOutcome {
        report: SweepReport { rows },
        dumps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionOutcome {
    pub originals: Vec<ImageVec>,
    pub degraded: Vec<ImageVec>,
    /// Averaged re-synthesis on the `[0,1]` scale, before bias correction.
    pub resynthesized: Vec<ImageVec>,
    pub err_degraded: f64,
    pub err_corrected: f64,
}

impl RegionOutcome {
    /// `(original, degraded, corrected)` per image, for grid dumps.
    pub fn grid(&self) -> Vec<Vec<&ImageVec>> {
        (0..self.originals.len())
            .map(|i| vec![&self.originals[i], &self.degraded[i], &self.resynthesized[i]])
            .collect()
    }
}

/// Zeroes `rect` in every test image, then corrects the holes by re-synthesis.
pub fn run_region_experiment(
    classifier: &Network,
    autoencoder: &Network,
    test: &LabeledDataset,
    stats: &DatasetStats,
    rect: &Rect,
    cfg: &ResynthConfig,
    seed: u64,
) -> Result<RegionOutcome> {
    cfg.validate()?;
    if test.is_empty() {
        return Err(Error::Degenerate("region experiment on an empty set".into()));
    }
    let originals = test.images().to_vec();
    let degraded: Vec<ImageVec> = originals.iter().map(|img| region_zero(img, rect)).collect();
    let raw_inputs: Vec<Vector> = degraded.iter().map(|img| to_network_input(img, stats)).collect();
    let err_degraded = classification_error_vectors(classifier, &raw_inputs, test.labels())?;

    let resynthesized = resynthesize_dataset(&degraded, autoencoder, stats, cfg, derive_seed(seed, REGION_DOMAIN, 0))?;
    let corrected = classifier_inputs(&resynthesized, stats, cfg, false)?;
    let err_corrected = classification_error_vectors(classifier, &corrected, test.labels())?;
    Ok(RegionOutcome {
        originals,
        degraded,
        resynthesized,
        err_degraded,
        err_corrected,
    })
}

/// Re-synthesizes glyph images without bias correction.
pub fn font_transform_images(
    autoencoder: &Network,
    glyphs: &[ImageVec],
    stats: &DatasetStats,
    cfg: &ResynthConfig,
    seed: u64,
) -> Result<Vec<ImageVec>> {
    let cfg = ResynthConfig {
        bias_correction: false,
        ..*cfg
    };
    resynthesize_dataset(glyphs, autoencoder, stats, &cfg, derive_seed(seed, FONT_DOMAIN, 0))
}

/// PGM in, PGM out.
pub fn run_font_transform(
    autoencoder: &Network,
    glyph_pgms: &[Vec<u8>],
    stats: &DatasetStats,
    cfg: &ResynthConfig,
    seed: u64,
) -> Result<Vec<Vec<u8>>> {
    let glyphs = glyph_pgms.iter().map(|b| read_pgm(b)).collect::<Result<Vec<_>>>()?;
    let out = font_transform_images(autoencoder, &glyphs, stats, cfg, seed)?;
    Ok(out.iter().map(write_pgm).collect())
}

pub const CSV_HEADER: &str = "degradation_pct,err_raw,err_corrected";

pub fn write_csv(report: &SweepReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &report.rows {
        writeln!(s, "{},{:.6},{:.6}", r.degradation_pct, r.err_raw, r.err_corrected).unwrap();
    }
    s
}

pub fn parse_csv(text: &str) -> Result<SweepReport> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Format(format!("CSV header is not {CSV_HEADER:?}")));
    }
    let rows = lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Format(format!("bad CSV row {line:?}"));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(SweepRow {
                degradation_pct: f[0].parse().map_err(|_| bad())?,
                err_raw: f[1].parse().map_err(|_| bad())?,
                err_corrected: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport { rows })
}

/// Flat `key=value` run record. Keys keep insertion order; setting an
/// existing key replaces its value in place.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = RunManifest::default();
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn stamp(&mut self) {
        self.set("timestamp", chrono::Utc::now().to_rfc3339());
    }

    pub fn set_stats(&mut self, stats: &DatasetStats) {
        self.set("stats.mean", format!("{:.16e}", stats.mean));
        self.set("stats.std", format!("{:.16e}", stats.std));
    }

    pub fn stats(&self) -> Result<DatasetStats> {
        let field = |k: &str| -> Result<f64> {
            self.get(k)
                .ok_or_else(|| Error::Config(format!("manifest has no {k}")))?
                .parse()
                .map_err(|_| Error::Format(format!("manifest {k} is not a real")))
        };
        DatasetStats::new(field("stats.mean")?, field("stats.std")?)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = RunManifest::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("manifest line {line:?} has no '='")))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn write_manifest(m: &RunManifest) -> String {
    m.to_text()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `<dir>/<experiment>_<row>_<col>.pgm` for every cell.
pub fn dump_grid(dir: &Path, experiment: &str, rows: &[Vec<&ImageVec>]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, img) in row.iter().enumerate() {
            let path = dir.join(format!("{experiment}_{r}_{c}.pgm"));
            fs::write(&path, write_pgm(img)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report() -> SweepReport {
        SweepReport {
            rows: default_levels()
                .into_iter()
                .map(|l| SweepRow {
                    degradation_pct: l,
                    err_raw: f64::from(l) / 111.0,
                    err_corrected: f64::from(l) / 333.0,
                })
                .collect(),
        }
    }

    #[test]
    fn csv_layout() {
        let csv = write_csv(&report());
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.starts_with("degradation_pct,err_raw,err_corrected\n0,0.000000,0.000000\n10,0.090090,0.030030\n"));
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
        assert_eq!(write_csv(&report()), csv);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_csv("a,b,c\n").is_err());
        assert!(parse_csv("degradation_pct,err_raw,err_corrected\n10,0.1\n").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = RunManifest::new("sweep");
        m.set("seed", 7);
        m.set_stats(&DatasetStats::new(0.1307, 0.3081).unwrap());
        m.set("seed", 8);
        let text = write_manifest(&m);
        assert!(text.starts_with("command=sweep\nseed=8\n"));
        let back = RunManifest::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.stats().unwrap(), DatasetStats::new(0.1307, 0.3081).unwrap());
        assert!(RunManifest::parse("no equals sign").is_err());
        assert!(RunManifest::new("x").stats().is_err());
    }

    #[test]
    fn sweep_config_validation() {
        let cfg = SweepConfig::new(1);
        assert!(cfg.validate(10_000).is_ok());
        assert!(cfg.validate(500).is_err());
        assert!(SweepConfig { subset: 0, ..cfg.clone() }.validate(10).is_err());
        assert!(SweepConfig { levels: vec![15], subset: 5, ..cfg.clone() }.validate(10).is_err());
        assert!(SweepConfig { levels: vec![110], subset: 5, ..cfg }.validate(10).is_err());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    proptest! {
        #[test]
        fn csv_round_trip_to_printed_precision(errs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 11)) {
            let rep = SweepReport {
                rows: default_levels().into_iter().zip(errs).map(|(l, (a, b))| SweepRow { degradation_pct: l, err_raw: a, err_corrected: b }).collect(),
            };
            let back = parse_csv(&write_csv(&rep)).unwrap();
            for (x, y) in rep.rows.iter().zip(&back.rows) {
                prop_assert_eq!(x.degradation_pct, y.degradation_pct);
                prop_assert!((x.err_raw - y.err_raw).abs() <= 5e-7);
                prop_assert!((x.err_corrected - y.err_corrected).abs() <= 5e-7);
            }
        }
    }
}
