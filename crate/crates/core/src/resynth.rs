//! Probabilistic re-synthesis through a trained autoencoder.
//!
//! A degraded image is re-degraded `passes` times (a fresh random replacement
//! of `secondary_p` of its pixels each time), every copy is pushed through the
//! autoencoder, and the outputs are averaged. Over a whole set, the grand mean
//! of the averaged images is then subtracted from each one so that output
//! units which are active regardless of input cancel out.

use rayon::prelude::*;

use crate::degrade::{check_proportion, random_replace};
use crate::error::{Error, Result};
use crate::kernel::Vector;
use crate::mnist::{to_network_input, DatasetStats, ImageVec, PIXELS};
use crate::net::{ActivationKind, Network};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResynthConfig {
    pub passes: usize,
    pub secondary_p: f64,
    pub bias_correction: bool,
}

impl Default for ResynthConfig {
    fn default() -> Self {
        ResynthConfig {
            passes: 100,
            secondary_p: 0.5,
            bias_correction: true,
        }
    }
}

impl ResynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(Error::Config("re-synthesis needs at least one pass".into()));
        }
        check_proportion(self.secondary_p)
    }
}

/// The autoencoder must map 784 → … → 784 with a sigmoid output.
pub fn check_autoencoder(net: &Network) -> Result<()> {
    if net.input_dim() != PIXELS || net.output_dim() != PIXELS {
        return Err(Error::shape(
            "autoencoder",
            format!("network {}→{}", net.input_dim(), net.output_dim()),
            format!("{PIXELS}→{PIXELS}"),
        ));
    }
    if net.output_activation() != ActivationKind::Sigmoid {
        return Err(Error::Config("autoencoder output layer must be sigmoid".into()));
    }
    Ok(())
}

/// Autoencoder outputs of each secondary-degraded copy, in pass order.
pub fn resynthesis_passes(
    img: &ImageVec,
    autoencoder: &Network,
    stats: &DatasetStats,
    cfg: &ResynthConfig,
    rng: &mut RngStream,
) -> Result<Vec<Vector>> {
    cfg.validate()?;
    check_autoencoder(autoencoder)?;
    let mut inputs = Vec::with_capacity(cfg.passes * PIXELS);
    for _ in 0..cfg.passes {
        let copy = random_replace(img, cfg.secondary_p, stats, rng)?;
        inputs.extend_from_slice(&to_network_input(&copy, stats));
    }
    let outputs = autoencoder.forward_batch(&inputs)?;
    Ok(outputs.chunks_exact(PIXELS).map(Vector::from).collect())
}

/// Mean of [`resynthesis_passes`], on the `[0,1]` storage scale.
pub fn resynthesize_one(
    img: &ImageVec,
    autoencoder: &Network,
    stats: &DatasetStats,
    cfg: &ResynthConfig,
    rng: &mut RngStream,
) -> Result<ImageVec> {
    let passes = resynthesis_passes(img, autoencoder, stats, cfg, rng)?;
    let mut sum = vec![0.0; PIXELS];
    for out in &passes {
        for (s, o) in sum.iter_mut().zip(out.iter()) {
            *s += o;
        }
    }
    let n = passes.len() as f64;
    Ok(ImageVec::from_unit_interval(sum.into_iter().map(|s| s / n).collect()))
}

/// Subtracts the per-pixel mean over the whole set from every image.
pub fn bias_correct(corrected: &[ImageVec]) -> Result<Vec<Vector>> {
    if corrected.is_empty() {
        return Err(Error::Degenerate("bias correction over an empty set".into()));
    }
    let mut grand = vec![0.0; PIXELS];
    for img in corrected {
        for (g, p) in grand.iter_mut().zip(img.pixels()) {
            *g += p;
        }
    }
    let n = corrected.len() as f64;
    grand.iter_mut().for_each(|g| *g /= n);
    Ok(corrected
        .iter()
        .map(|img| img.pixels().iter().zip(&grand).map(|(p, g)| p - g).collect())
        .collect())
}

/// [`resynthesize_one`] for every image; image `i` draws from stream `i` of `seed`.
pub fn resynthesize_dataset(
    degraded: &[ImageVec],
    autoencoder: &Network,
    stats: &DatasetStats,
    cfg: &ResynthConfig,
    seed: u64,
) -> Result<Vec<ImageVec>> {
    cfg.validate()?;
    check_autoencoder(autoencoder)?;
    degraded
        .par_iter()
        .enumerate()
        .map(|(i, img)| resynthesize_one(img, autoencoder, stats, cfg, &mut RngStream::new(seed, i as u64)))
        .collect()
}

/// Classifier-ready corrected vectors: re-synthesis followed, when enabled,
/// by grand-mean subtraction.
pub fn correct_dataset(
    degraded: &[ImageVec],
    autoencoder: &Network,
    stats: &DatasetStats,
    cfg: &ResynthConfig,
    seed: u64,
) -> Result<Vec<Vector>> {
    let resynth = resynthesize_dataset(degraded, autoencoder, stats, cfg, seed)?;
    if cfg.bias_correction {
        bias_correct(&resynth)
    } else {
        Ok(resynth.into_iter().map(|img| Vector::from(img.into_pixels())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{autoencoder_specs, init_network, LayerSpec};
    use rand::Rng;

    fn small_autoencoder(seed: u64) -> Network {
        init_network(
            &[
                LayerSpec::new(PIXELS, 24, ActivationKind::Sigmoid),
                LayerSpec::new(24, PIXELS, ActivationKind::Sigmoid),
            ],
            seed,
        )
        .unwrap()
    }

    fn stats() -> DatasetStats {
        DatasetStats::new(0.13, 0.31).unwrap()
    }

    fn random_image(seed: u64) -> ImageVec {
        let mut rng = RngStream::new(seed, 1000);
        ImageVec::new((0..PIXELS).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn single_clean_pass_is_one_forward() {
        let ae = small_autoencoder(1);
        let img = random_image(1);
        let cfg = ResynthConfig {
            passes: 1,
            secondary_p: 0.0,
            bias_correction: false,
        };
        let out = resynthesize_one(&img, &ae, &stats(), &cfg, &mut RngStream::new(0, 0)).unwrap();
        let direct = ae.output(&to_network_input(&img, &stats())).unwrap();
        assert_eq!(out.pixels(), &*direct);
    }

    #[test]
    fn two_passes_average_the_recorded_passes() {
        let ae = small_autoencoder(2);
        let img = random_image(2);
        let cfg = ResynthConfig {
            passes: 2,
            ..Default::default()
        };
        let passes = resynthesis_passes(&img, &ae, &stats(), &cfg, &mut RngStream::new(5, 3)).unwrap();
        assert_eq!(passes.len(), 2);
        assert_ne!(passes[0], passes[1]);
        let mean = resynthesize_one(&img, &ae, &stats(), &cfg, &mut RngStream::new(5, 3)).unwrap();
        for j in 0..PIXELS {
            assert_eq!(mean.pixels()[j], (passes[0][j] + passes[1][j]) / 2.0);
        }
    }

    #[test]
    fn outputs_stay_inside_unit_interval() {
        let ae = small_autoencoder(3);
        let out = resynthesize_one(&random_image(3), &ae, &stats(), &ResynthConfig { passes: 8, ..Default::default() }, &mut RngStream::new(1, 1)).unwrap();
        assert!(out.pixels().iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn bias_correct_cases() {
        let a = random_image(10);
        let same = bias_correct(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!(same.iter().all(|v| v.iter().all(|&x| x.abs() < 1e-15)));

        let b = random_image(11);
        let pair = bias_correct(&[a.clone(), b.clone()]).unwrap();
        for j in 0..PIXELS {
            let (x, y) = (a.pixels()[j], b.pixels()[j]);
            assert!((pair[0][j] - (x - y) / 2.0).abs() < 1e-15);
            assert!((pair[1][j] - (y - x) / 2.0).abs() < 1e-15);
        }

        let many: Vec<ImageVec> = (0..37).map(random_image).collect();
        let centred = bias_correct(&many).unwrap();
        for j in 0..PIXELS {
            let m = centred.iter().map(|v| v[j]).sum::<f64>() / 37.0;
            assert!(m.abs() < 1e-12);
        }

        assert!(matches!(bias_correct(&[]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn correct_dataset_contracts() {
        let ae = small_autoencoder(4);
        let cfg = ResynthConfig {
            passes: 3,
            ..Default::default()
        };
        let single = correct_dataset(&[random_image(1)], &ae, &stats(), &cfg, 9).unwrap();
        assert!(single[0].iter().all(|&x| x == 0.0));

        let imgs: Vec<ImageVec> = (0..6).map(random_image).collect();
        let a = correct_dataset(&imgs, &ae, &stats(), &cfg, 9).unwrap();
        let b = correct_dataset(&imgs, &ae, &stats(), &cfg, 9).unwrap();
        assert_eq!(a, b);

        let raw_cfg = ResynthConfig {
            bias_correction: false,
            ..cfg
        };
        let raw = correct_dataset(&imgs, &ae, &stats(), &raw_cfg, 9).unwrap();
        for (i, img) in imgs.iter().enumerate() {
            let one = resynthesize_one(img, &ae, &stats(), &raw_cfg, &mut RngStream::new(9, i as u64)).unwrap();
            assert_eq!(&*raw[i], one.pixels());
        }
    }

    #[test]
    fn parallel_execution_does_not_change_results() {
        let ae = small_autoencoder(5);
        let imgs: Vec<ImageVec> = (0..12).map(random_image).collect();
        let cfg = ResynthConfig {
            passes: 4,
            ..Default::default()
        };
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| correct_dataset(&imgs, &ae, &stats(), &cfg, 3)).unwrap();
        let b = wide.install(|| correct_dataset(&imgs, &ae, &stats(), &cfg, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_wrong_shapes_and_configs() {
        let clf = init_network(&crate::net::classifier_specs(), 0).unwrap();
        let img = random_image(0);
        let cfg = ResynthConfig::default();
        assert!(matches!(
            resynthesize_one(&img, &clf, &stats(), &cfg, &mut RngStream::new(0, 0)),
            Err(Error::Shape { .. })
        ));
        let ae = small_autoencoder(0);
        for bad in [
            ResynthConfig { passes: 0, ..cfg },
            ResynthConfig { secondary_p: 1.5, ..cfg },
        ] {
            assert!(resynthesize_one(&img, &ae, &stats(), &bad, &mut RngStream::new(0, 0)).is_err());
        }
        assert_eq!(autoencoder_specs()[1].out_dim, PIXELS);
    }
}
