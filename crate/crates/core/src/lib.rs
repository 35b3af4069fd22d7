//! Deep transform: error correction of degraded digit images by repeated
//! re-synthesis through a trained autoencoder.
//!
//! The crate contains everything the pipeline needs, built from plain `f64`
//! buffers: a small dense kernel, MNIST IDX and PGM I/O, a fully connected
//! network with backpropagation, a mini-batch SGD trainer, pixel degradation,
//! Monte-Carlo re-synthesis and the experiment drivers that tie them together.
//!
//! ```no_run
//! use deep_transform::{experiments, mnist, net, train};
//!
//! # fn main() -> deep_transform::Result<()> {
//! let data = mnist::LabeledDataset::load("train-images-idx3-ubyte".as_ref(), "train-labels-idx1-ubyte".as_ref())?;
//! let stats = mnist::compute_stats(&data)?;
//! let cfg = train::TrainConfig::classifier(7);
//! let init = net::init_network(&net::classifier_specs(), cfg.seed)?;
//! let pairs = train::ClassifierPairs { data: &data, stats };
//! let clf = train::train(init, &pairs, &cfg, &mut |r| println!("{r}"))?;
//! # let _ = (clf, experiments::default_levels());
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod degrade;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod mnist;
pub mod net;
pub mod resynth;
pub mod rng;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use kernel::{Matrix, Vector};
pub use mnist::{DatasetStats, ImageVec, LabeledDataset};
pub use net::{ActivationKind, LossKind, Network};
pub use rng::RngStream;
