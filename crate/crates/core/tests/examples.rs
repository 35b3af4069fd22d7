//! Runs every example on its small synthetic configuration.

#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;
#[allow(dead_code)]
#[path = "../examples/train_classifier.rs"]
mod train_classifier;
#[allow(dead_code)]
#[path = "../examples/train_autoencoder.rs"]
mod train_autoencoder;
#[allow(dead_code)]
#[path = "../examples/degrade_digits.rs"]
mod degrade_digits;
#[allow(dead_code)]
#[path = "../examples/resynthesize.rs"]
mod resynthesize;
#[allow(dead_code)]
#[path = "../examples/degradation_sweep.rs"]
mod degradation_sweep;
#[allow(dead_code)]
#[path = "../examples/region_recovery.rs"]
mod region_recovery;
#[allow(dead_code)]
#[path = "../examples/font_transform.rs"]
mod font_transform;
#[allow(dead_code)]
#[path = "../examples/image_formats.rs"]
mod image_formats;

#[test]
fn gradient_check_agrees() {
    for (loss, worst) in gradient_check::run_example(3).unwrap() {
        assert!(worst < 1e-4, "{loss:?}: {worst}");
    }
}

#[test]
fn classifier_learns_synthetic_digits() {
    let s = train_classifier::run_example().unwrap();
    assert!(s.final_loss.is_finite());
    assert!(s.test_error < 0.5, "test error {}", s.test_error);
    assert!(s.checkpoint_bytes > 0);
}

#[test]
fn autoencoder_loss_falls() {
    let s = train_autoencoder::run_example().unwrap();
    assert!(s.final_loss < s.first_loss);
    assert!(s.test_loss.is_finite());
}

#[test]
fn degrade_writes_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = degrade_digits::run_example(dir.path()).unwrap();
    assert_eq!(out.len(), degrade_digits::LEVELS.len() + 1);
    assert_eq!(out[0].1, 0);
    for (path, _) in &out {
        assert!(path.exists());
    }
}

#[test]
fn resynthesis_moves_towards_clean_images() {
    let (before, after) = resynthesize::run_example().unwrap();
    assert!(after < before, "before {before}, after {after}");
}

#[test]
fn sweep_covers_requested_levels() {
    let report = degradation_sweep::run_example().unwrap();
    let levels: Vec<u32> = report.rows.iter().map(|r| r.degradation_pct).collect();
    assert_eq!(levels, vec![0, 50, 100]);
    assert!(report.row(100).unwrap().err_raw > report.row(0).unwrap().err_raw);
}

#[test]
fn region_recovery_writes_triples() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = region_recovery::run_example(Some(dir.path())).unwrap();
    assert_eq!(outcome.originals.len(), 40);
    assert!(dir.path().join("region_0_2.pgm").exists());
    assert!((0.0..=1.0).contains(&outcome.err_corrected));
}

#[test]
fn font_transform_round_trips_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let out = font_transform::run_example(dir.path()).unwrap();
    assert_eq!(out.len(), 10);
    assert!(dir.path().join("glyph_9_font.pgm").exists());
}

#[test]
fn formats_round_trip() {
    let (idx, pgm, _) = image_formats::run_example().unwrap();
    assert_eq!(idx, 16 + 12 * 784);
    assert_eq!(pgm, 13 + 784);
}
