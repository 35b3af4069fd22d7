//! Command-line front end.
//!
//! Every subcommand writes a `key=value` manifest next to its outputs holding
//! the settings and input digests needed to repeat the run bit for bit.
//! Training commands store the dataset statistics in `<checkpoint>.manifest`;
//! later commands read them from there.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 I/O or malformed input
//! file, 3 numeric divergence.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::degrade::{random_replace, region_zero, Rect};
use crate::error::{Error, Result};
use crate::experiments::{
    dump_grid, run_font_transform, run_region_experiment, run_sweep, sha256_hex, write_csv, RunManifest, SweepConfig,
};
use crate::mnist::{compute_stats, read_file, read_pgm, write_pgm, DatasetStats, ImageVec, LabeledDataset};
use crate::net::{autoencoder_specs, classifier_specs, init_network, load_checkpoint, save_checkpoint, Network};
use crate::resynth::{check_autoencoder, resynthesize_dataset, ResynthConfig};
use crate::rng::{derive_seed, RngStream};
use crate::train::{
    classification_error, train, AutoencoderPairs, ClassifierPairs, TrainConfig, TrainingPairs,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEGRADE_DOMAIN: u64 = 0xC11D;

#[derive(Debug, Parser)]
#[command(name = "deep-transform", version, about = "Digit image recovery by autoencoder re-synthesis")]
pub struct Cli {
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the 784x100x10 classifier.
    TrainClassifier(TrainArgs),
    /// Train the 784x1500x784 autoencoder.
    TrainAutoencoder(TrainArgs),
    /// Degrade PGM images or IDX test images.
    Degrade(DegradeArgs),
    /// Re-synthesize images through the autoencoder.
    Resynth(ResynthArgs),
    /// Raw and corrected error across degradation levels.
    Sweep(SweepArgs),
    /// Zero a rectangle in every test image and try to recover it.
    Region(RegionArgs),
    /// Re-synthesize glyph images with bias correction off.
    Font(FontArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_images: PathBuf,
    #[arg(long)]
    pub train_labels: PathBuf,
    /// Optional test set; its clean error is reported after training.
    #[arg(long, requires = "test_labels")]
    pub test_images: Option<PathBuf>,
    #[arg(long, requires = "test_images")]
    pub test_labels: Option<PathBuf>,
    /// Output checkpoint; the manifest goes to `<checkpoint>.manifest`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_EPOCHS)]
    pub epochs: usize,
    /// Learning rate (default 0.1 for the classifier, 0.5 for the autoencoder).
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_BATCH)]
    pub batch: usize,
    /// Train on the first N training images only.
    #[arg(long)]
    pub subset: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsSource {
    /// Checkpoint whose manifest supplies the dataset statistics.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Training images to compute the statistics from instead.
    #[arg(long)]
    pub train_images: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImageSource {
    /// PGM inputs.
    pub inputs: Vec<PathBuf>,
    /// IDX test images, used when no PGM inputs are given.
    #[arg(long)]
    pub test_images: Option<PathBuf>,
    /// Number of IDX images to take.
    #[arg(long, default_value_t = 10)]
    pub subset: usize,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[command(flatten)]
    pub images: ImageSource,
    #[command(flatten)]
    pub stats: StatsSource,
    /// Replacement level in percent, 0 to 100.
    #[arg(long, conflicts_with = "rect")]
    pub level: Option<f64>,
    /// Zero the rectangle r0,c0,h,w instead.
    #[arg(long)]
    pub rect: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ResynthFlags {
    #[arg(long, default_value_t = 100)]
    pub passes: usize,
    #[arg(long, default_value_t = 0.5)]
    pub secondary_p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ResynthArgs {
    #[command(flatten)]
    pub images: ImageSource,
    #[arg(long)]
    pub autoencoder: PathBuf,
    /// Statistics source when the autoencoder has no manifest.
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[command(flatten)]
    pub resynth: ResynthFlags,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub classifier: PathBuf,
    #[arg(long)]
    pub autoencoder: PathBuf,
    #[arg(long)]
    pub test_images: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = SweepConfig::DEFAULT_SUBSET)]
    pub subset: usize,
    #[command(flatten)]
    pub resynth: ResynthFlags,
    /// Classify re-synthesized images without grand-mean subtraction.
    #[arg(long)]
    pub no_bias_correction: bool,
    /// Subtract the dataset mean again from bias-corrected vectors.
    #[arg(long)]
    pub recenter_corrected: bool,
    /// Write degraded and re-synthesized PGMs of the first N images per level.
    #[arg(long, default_value_t = 0)]
    pub dump: usize,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub classifier: PathBuf,
    #[arg(long)]
    pub autoencoder: PathBuf,
    #[arg(long)]
    pub test_images: PathBuf,
    #[arg(long)]
    pub test_labels: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "9,9,10,10")]
    pub rect: String,
    #[arg(long, default_value_t = 500)]
    pub subset: usize,
    #[command(flatten)]
    pub resynth: ResynthFlags,
    /// Write original, degraded and re-synthesized PGMs of the first N images.
    #[arg(long, default_value_t = 0)]
    pub dump: usize,
}

#[derive(Debug, Args)]
pub struct FontArgs {
    /// Glyph PGMs.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub autoencoder: PathBuf,
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[command(flatten)]
    pub resynth: ResynthFlags,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Format(_) | Error::Length { .. } | Error::UnsupportedShape { .. } => EXIT_IO,
        Error::Divergence { .. } | Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.workers {
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::TrainClassifier(a) => cmd_train(a, false),
        Command::TrainAutoencoder(a) => cmd_train(a, true),
        Command::Degrade(a) => cmd_degrade(a),
        Command::Resynth(a) => cmd_resynth(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Region(a) => cmd_region(a),
        Command::Font(a) => cmd_font(a),
    }
}

/// `<checkpoint>.manifest`.
pub fn manifest_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn record_file(m: &mut RunManifest, key: &str, path: &Path) -> Result<()> {
    m.set(key, path.display());
    m.set(&format!("{key}.sha256"), sha256_hex(&read_file(path)?));
    Ok(())
}

fn load_network(path: &Path) -> Result<Network> {
    load_checkpoint(&read_file(path)?)
}

fn stats_from_images(path: &Path) -> Result<DatasetStats> {
    let images = crate::mnist::parse_idx_images(&read_file(path)?)?;
    let labels = vec![0; images.len()];
    compute_stats(&LabeledDataset::new(images, labels)?)
}

/// Statistics from the checkpoint manifest, else from training images.
fn resolve_stats(checkpoint: Option<&Path>, train_images: Option<&Path>) -> Result<DatasetStats> {
    if let Some(ckpt) = checkpoint {
        let path = manifest_path(ckpt);
        if path.exists() || train_images.is_none() {
            return RunManifest::load(&path)?.stats();
        }
    }
    match train_images {
        Some(p) => stats_from_images(p),
        None => Err(Error::Config("dataset statistics need --checkpoint or --train-images".into())),
    }
}

fn check_shape(net: &Network, what: &str, input: usize, output: usize) -> Result<()> {
    if net.input_dim() != input || net.output_dim() != output {
        return Err(Error::Config(format!(
            "{what} checkpoint maps {}→{}, expected {input}→{output}",
            net.input_dim(),
            net.output_dim()
        )));
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, autoencoder: bool) -> Result<()> {
    let mut data = LabeledDataset::load(&a.train_images, &a.train_labels)?;
    if let Some(n) = a.subset {
        if n == 0 || n > data.len() {
            return Err(Error::Config(format!("--subset {n} must lie in 1..={}", data.len())));
        }
        data = data.head(n);
    }
    let stats = compute_stats(&data)?;
    let (mut cfg, specs, name) = if autoencoder {
        (TrainConfig::autoencoder(a.seed), autoencoder_specs(), "train-autoencoder")
    } else {
        (TrainConfig::classifier(a.seed), classifier_specs(), "train-classifier")
    };
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    if let Some(lr) = a.lr {
        cfg.learning_rate = lr;
    }
    cfg.validate()?;

    let test = match (&a.test_images, &a.test_labels) {
        (Some(i), Some(l)) => Some(LabeledDataset::load(i, l)?),
        _ => None,
    };

    let init = init_network(&specs, cfg.seed)?;
    let clf_pairs;
    let ae_pairs;
    let pairs: &dyn TrainingPairs = if autoencoder {
        ae_pairs = AutoencoderPairs { data: &data, stats };
        &ae_pairs
    } else {
        clf_pairs = ClassifierPairs { data: &data, stats };
        &clf_pairs
    };
    let mut log = String::new();
    let net = train(init, pairs, &cfg, &mut |r| {
        println!("{r}");
        log.push_str(&format!("{r}\n"));
    })?;

    let bytes = save_checkpoint(&net);
    write_file(&a.checkpoint, &bytes)?;

    let mut m = RunManifest::new(name);
    record_file(&mut m, "train_images", &a.train_images)?;
    record_file(&mut m, "train_labels", &a.train_labels)?;
    m.set("train_count", data.len());
    m.set("seed", cfg.seed);
    m.set("generator", crate::rng::GENERATOR_ID);
    m.set("epochs", cfg.epochs);
    m.set("learning_rate", cfg.learning_rate);
    m.set("batch_size", cfg.batch_size);
    m.set("loss", format!("{:?}", cfg.loss));
    m.set("init", "glorot-uniform, zero bias");
    m.set_stats(&stats);
    if let Some(test) = &test {
        if !autoencoder {
            let err = classification_error(&net, test, &stats)?;
            println!("test error {err:.6}");
            m.set("test_error", format!("{err:.6}"));
        }
    }
    m.set("checkpoint.sha256", sha256_hex(&bytes));
    m.stamp();
    m.save(&manifest_path(&a.checkpoint))?;
    let log_path = {
        let mut s = a.checkpoint.as_os_str().to_owned();
        s.push(".log");
        PathBuf::from(s)
    };
    write_file(&log_path, log.as_bytes())
}

/// Input images with the file stem used to name outputs.
fn load_images(src: &ImageSource, m: &mut RunManifest) -> Result<Vec<(String, ImageVec)>> {
    if !src.inputs.is_empty() {
        let mut out = Vec::with_capacity(src.inputs.len());
        for (i, path) in src.inputs.iter().enumerate() {
            let bytes = read_file(path)?;
            m.set(&format!("input.{i}"), path.display());
            m.set(&format!("input.{i}.sha256"), sha256_hex(&bytes));
            let stem = path.file_stem().map_or_else(|| format!("image{i}"), |s| s.to_string_lossy().into_owned());
            out.push((stem, read_pgm(&bytes)?));
        }
        return Ok(out);
    }
    let Some(path) = &src.test_images else {
        return Err(Error::Config("no input images: pass PGM paths or --test-images".into()));
    };
    let images = crate::mnist::parse_idx_images(&read_file(path)?)?;
    if src.subset == 0 || src.subset > images.len() {
        return Err(Error::Config(format!("--subset {} must lie in 1..={}", src.subset, images.len())));
    }
    record_file(m, "test_images", path)?;
    m.set("subset", src.subset);
    Ok(images.into_iter().take(src.subset).enumerate().map(|(i, img)| (format!("test{i:05}"), img)).collect())
}

fn write_outputs(dir: &Path, suffix: &str, names: &[String], images: &[ImageVec]) -> Result<()> {
    for (name, img) in names.iter().zip(images) {
        let path = dir.join(format!("{name}_{suffix}.pgm"));
        write_file(&path, &write_pgm(img))?;
    }
    Ok(())
}

fn cmd_degrade(a: DegradeArgs) -> Result<()> {
    enum Mode {
        Level(f64),
        Region(Rect),
    }
    let mode = match (a.level, &a.rect) {
        (Some(l), None) if (0.0..=100.0).contains(&l) => Mode::Level(l),
        (Some(l), None) => return Err(Error::Config(format!("--level {l} outside [0,100]"))),
        (None, Some(r)) => Mode::Region(r.parse()?),
        _ => return Err(Error::Config("degrade needs exactly one of --level or --rect".into())),
    };
    let mut m = RunManifest::new("degrade");
    let inputs = load_images(&a.images, &mut m)?;
    create_dir(&a.out_dir)?;
    let (names, imgs): (Vec<String>, Vec<ImageVec>) = inputs.into_iter().unzip();
    let out = match mode {
        Mode::Level(level) => {
            let stats = resolve_stats(a.stats.checkpoint.as_deref(), a.stats.train_images.as_deref())?;
            m.set("level", level);
            m.set("seed", a.seed);
            m.set("generator", crate::rng::GENERATOR_ID);
            m.set_stats(&stats);
            let seed = derive_seed(a.seed, DEGRADE_DOMAIN, 0);
            imgs.iter()
                .enumerate()
                .map(|(i, img)| random_replace(img, level / 100.0, &stats, &mut RngStream::new(seed, i as u64)))
                .collect::<Result<Vec<_>>>()?
        }
        Mode::Region(rect) => {
            m.set("rect", rect);
            imgs.iter().map(|img| region_zero(img, &rect)).collect()
        }
    };
    write_outputs(&a.out_dir, "degraded", &names, &out)?;
    m.set("outputs", out.len());
    m.stamp();
    m.save(&a.out_dir.join("degrade.manifest"))
}

fn resynth_config(f: &ResynthFlags, bias_correction: bool, m: &mut RunManifest) -> Result<ResynthConfig> {
    let cfg = ResynthConfig {
        passes: f.passes,
        secondary_p: f.secondary_p,
        bias_correction,
    };
    cfg.validate()?;
    m.set("passes", cfg.passes);
    m.set("secondary_p", cfg.secondary_p);
    m.set("bias_correction", cfg.bias_correction);
    m.set("seed", f.seed);
    m.set("generator", crate::rng::GENERATOR_ID);
    Ok(cfg)
}

fn load_autoencoder(path: &Path, m: &mut RunManifest) -> Result<Network> {
    let ae = load_network(path)?;
    check_autoencoder(&ae).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    record_file(m, "autoencoder", path)?;
    Ok(ae)
}

/// Writes the averaged re-synthesis of each input. Bias correction is a
/// set-level step for classification and is not applied to these images.
fn cmd_resynth(a: ResynthArgs) -> Result<()> {
    let mut m = RunManifest::new("resynth");
    let ae = load_autoencoder(&a.autoencoder, &mut m)?;
    let stats = resolve_stats(Some(&a.autoencoder), a.train_images.as_deref())?;
    m.set_stats(&stats);
    let cfg = resynth_config(&a.resynth, false, &mut m)?;
    let inputs = load_images(&a.images, &mut m)?;
    create_dir(&a.out_dir)?;
    let (names, imgs): (Vec<String>, Vec<ImageVec>) = inputs.into_iter().unzip();
    let out = resynthesize_dataset(&imgs, &ae, &stats, &cfg, a.resynth.seed)?;
    write_outputs(&a.out_dir, "resynth", &names, &out)?;
    m.set("outputs", out.len());
    m.stamp();
    m.save(&a.out_dir.join("resynth.manifest"))
}

fn load_pair(
    classifier: &Path,
    autoencoder: &Path,
    test_images: &Path,
    test_labels: &Path,
    m: &mut RunManifest,
) -> Result<(Network, Network, LabeledDataset, DatasetStats)> {
    let clf = load_network(classifier)?;
    check_shape(&clf, "classifier", crate::mnist::PIXELS, crate::mnist::CLASSES)?;
    record_file(m, "classifier", classifier)?;
    let ae = load_autoencoder(autoencoder, m)?;
    let stats = RunManifest::load(&manifest_path(classifier))?.stats()?;
    m.set_stats(&stats);
    let test = LabeledDataset::load(test_images, test_labels)?;
    record_file(m, "test_images", test_images)?;
    record_file(m, "test_labels", test_labels)?;
    Ok((clf, ae, test, stats))
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut m = RunManifest::new("sweep");
    let (clf, ae, test, stats) = load_pair(&a.classifier, &a.autoencoder, &a.test_images, &a.test_labels, &mut m)?;
    let resynth = resynth_config(&a.resynth, !a.no_bias_correction, &mut m)?;
    let cfg = SweepConfig {
        subset: a.subset,
        resynth,
        seed: a.resynth.seed,
        recenter_corrected: a.recenter_corrected,
        dump: a.dump,
        ..SweepConfig::new(a.resynth.seed)
    };
    cfg.validate(test.len())?;
    cfg.manifest_entries(&mut m);
    create_dir(&a.out_dir)?;
    let outcome = run_sweep(&clf, &ae, &test, &stats, &cfg, |row| {
        println!(
            "level {:3}% raw {:.4} corrected {:.4}",
            row.degradation_pct, row.err_raw, row.err_corrected
        );
    })?;
    let csv = write_csv(&outcome.report);
    write_file(&a.out_dir.join("sweep.csv"), csv.as_bytes())?;
    for d in &outcome.dumps {
        let rows: Vec<Vec<&ImageVec>> = d.degraded.iter().zip(&d.resynthesized).map(|(x, y)| vec![x, y]).collect();
        dump_grid(&a.out_dir, &format!("sweep{:03}", d.degradation_pct), &rows)?;
    }
    m.set("csv.sha256", sha256_hex(csv.as_bytes()));
    m.stamp();
    m.save(&a.out_dir.join("sweep.manifest"))
}

fn cmd_region(a: RegionArgs) -> Result<()> {
    let rect: Rect = a.rect.parse()?;
    let mut m = RunManifest::new("region");
    let (clf, ae, test, stats) = load_pair(&a.classifier, &a.autoencoder, &a.test_images, &a.test_labels, &mut m)?;
    if a.subset == 0 || a.subset > test.len() {
        return Err(Error::Config(format!("--subset {} must lie in 1..={}", a.subset, test.len())));
    }
    let cfg = resynth_config(&a.resynth, true, &mut m)?;
    m.set("rect", rect);
    m.set("subset", a.subset);
    create_dir(&a.out_dir)?;
    let out = run_region_experiment(&clf, &ae, &test.head(a.subset), &stats, &rect, &cfg, a.resynth.seed)?;
    println!("degraded error {:.6} corrected error {:.6}", out.err_degraded, out.err_corrected);
    m.set("err_degraded", format!("{:.6}", out.err_degraded));
    m.set("err_corrected", format!("{:.6}", out.err_corrected));
    if a.dump > 0 {
        let grid = out.grid();
        dump_grid(&a.out_dir, "region", &grid[..a.dump.min(grid.len())])?;
    }
    m.stamp();
    m.save(&a.out_dir.join("region.manifest"))
}

fn cmd_font(a: FontArgs) -> Result<()> {
    let mut m = RunManifest::new("font");
    let ae = load_autoencoder(&a.autoencoder, &mut m)?;
    let stats = resolve_stats(Some(&a.autoencoder), a.train_images.as_deref())?;
    m.set_stats(&stats);
    let cfg = resynth_config(&a.resynth, false, &mut m)?;
    let mut glyphs = Vec::with_capacity(a.inputs.len());
    let mut names = Vec::with_capacity(a.inputs.len());
    for (i, path) in a.inputs.iter().enumerate() {
        let bytes = read_file(path)?;
        m.set(&format!("input.{i}"), path.display());
        m.set(&format!("input.{i}.sha256"), sha256_hex(&bytes));
        names.push(path.file_stem().map_or_else(|| format!("glyph{i}"), |s| s.to_string_lossy().into_owned()));
        glyphs.push(bytes);
    }
    create_dir(&a.out_dir)?;
    let out = run_font_transform(&ae, &glyphs, &stats, &cfg, a.resynth.seed)?;
    for (name, pgm) in names.iter().zip(&out) {
        write_file(&a.out_dir.join(format!("{name}_font.pgm")), pgm)?;
    }
    m.set("outputs", out.len());
    m.stamp();
    m.save(&a.out_dir.join("font.manifest"))
}
