//! MNIST IDX containers, dataset statistics and 28×28 PGM images.
//!
//! Images are stored on the `[0,1]` intensity scale. The zero-mean shift used
//! by the networks is applied by [`to_network_input`] and never stored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::{RunningStats, Vector};

pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;
pub const CLASSES: usize = 10;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;
const PGM_HEADER: &[u8] = b"P5\n28 28\n255\n";

/// A 28×28 image unpacked row-major into 784 intensities in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVec(Vec<f64>);

impl ImageVec {
    pub fn new(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != PIXELS {
            return Err(Error::shape(
                "image",
                format!("{} pixels", pixels.len()),
                format!("{PIXELS} pixels"),
            ));
        }
        if let Some((i, v)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Domain(format!("pixel {i} = {v} outside [0,1]")));
        }
        Ok(ImageVec(pixels))
    }

    pub fn filled(value: f64) -> Result<Self> {
        Self::new(vec![value; PIXELS])
    }

    pub fn zeros() -> Self {
        ImageVec(vec![0.0; PIXELS])
    }

    /// Builds an image from raw 8-bit intensities.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::new(bytes.iter().map(|&b| f64::from(b) / 255.0).collect())
    }

    /// Clamps into `[0,1]`; used for sigmoid outputs and clamped draws.
    pub(crate) fn from_unit_interval(mut pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), PIXELS);
        for p in &mut pixels {
            *p = p.clamp(0.0, 1.0);
        }
        ImageVec(pixels)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.0
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.0
    }

    /// Pixel intensities quantized to bytes, `round(v·255)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.iter().map(|v| (v * 255.0).round() as u8).collect()
    }
}

/// Images with class labels 0–9.
#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    images: Vec<ImageVec>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(images: Vec<ImageVec>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::shape(
                "dataset",
                format!("{} images", images.len()),
                format!("{} labels", labels.len()),
            ));
        }
        if let Some(l) = labels.iter().find(|&&l| l as usize >= CLASSES) {
            return Err(Error::Domain(format!("label {l} outside 0..=9")));
        }
        Ok(LabeledDataset { images, labels })
    }

    /// Loads an IDX image file and the matching label file.
    pub fn load(images_path: &Path, labels_path: &Path) -> Result<Self> {
        let images = parse_idx_images(&read_file(images_path)?)?;
        let labels = parse_idx_labels(&read_file(labels_path)?)?;
        Self::new(images, labels)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[ImageVec] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The first `n` examples (or all, if fewer).
    pub fn head(&self, n: usize) -> LabeledDataset {
        let n = n.min(self.len());
        LabeledDataset {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ImageVec, u8)> {
        self.images.iter().zip(self.labels.iter().copied())
    }
}

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Training and test sets from a directory holding the four uncompressed
/// MNIST files under their usual names.
pub fn load_mnist_dir(dir: &Path) -> Result<(LabeledDataset, LabeledDataset)> {
    let train = LabeledDataset::load(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?;
    let test = LabeledDataset::load(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?;
    Ok((train, test))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Scalar intensity statistics over all training pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub mean: f64,
    pub std: f64,
}

impl DatasetStats {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mean) || !(std >= 0.0) || !std.is_finite() {
            return Err(Error::Domain(format!("invalid stats mean={mean} std={std}")));
        }
        Ok(DatasetStats { mean, std })
    }
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Length {
            expected: offset + 4,
            found: bytes.len(),
        })
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageVec>> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "IDX image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}"
        )));
    }
    let n = read_u32_be(bytes, 4)? as usize;
    let rows = read_u32_be(bytes, 8)? as usize;
    let cols = read_u32_be(bytes, 12)? as usize;
    if rows != SIDE || cols != SIDE {
        return Err(Error::UnsupportedShape { rows, cols });
    }
    let payload = &bytes[16..];
    let expected = n * PIXELS;
    if payload.len() < expected {
        return Err(Error::Length {
            expected: 16 + expected,
            found: bytes.len(),
        });
    }
    payload[..expected]
        .chunks_exact(PIXELS)
        .map(ImageVec::from_bytes)
        .collect()
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "IDX label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}"
        )));
    }
    let n = read_u32_be(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() < n {
        return Err(Error::Length {
            expected: 8 + n,
            found: bytes.len(),
        });
    }
    let labels = payload[..n].to_vec();
    if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
        return Err(Error::Domain(format!("label {l} at index {i} outside 0..=9")));
    }
    Ok(labels)
}

/// Serializes images as an IDX3 file.
pub fn encode_idx_images(images: &[ImageVec]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * PIXELS);
    for word in [IMAGE_MAGIC, images.len() as u32, SIDE as u32, SIDE as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend(img.to_bytes());
    }
    out
}

/// Serializes labels as an IDX1 file.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn compute_stats(train: &LabeledDataset) -> Result<DatasetStats> {
    if train.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    let mut acc = RunningStats::default();
    for img in train.images() {
        acc.push_slice(img.pixels());
    }
    let (mean, std) = acc.finish()?;
    DatasetStats::new(mean, std)
}

/// Zero-mean network input: every pixel minus the dataset mean.
pub fn to_network_input(img: &ImageVec, stats: &DatasetStats) -> Vector {
    img.pixels().iter().map(|p| p - stats.mean).collect()
}

pub fn write_pgm(img: &ImageVec) -> Vec<u8> {
    let mut out = Vec::with_capacity(PGM_HEADER.len() + PIXELS);
    out.extend_from_slice(PGM_HEADER);
    out.extend(img.to_bytes());
    out
}

pub fn read_pgm(bytes: &[u8]) -> Result<ImageVec> {
    let mut pos = 0;
    let magic = pgm_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Format(format!(
            "PGM magic {:?}, only binary P5 is supported",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = pgm_number(bytes, &mut pos)?;
    let height = pgm_number(bytes, &mut pos)?;
    let maxval = pgm_number(bytes, &mut pos)?;
    if width != SIDE || height != SIDE {
        return Err(Error::Format(format!("PGM is {width}x{height}, expected 28x28")));
    }
    if maxval != 255 {
        return Err(Error::Format(format!("PGM maxval {maxval}, expected 255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("PGM header not terminated".into())),
    }
    let raster = &bytes[pos..];
    if raster.len() < PIXELS {
        return Err(Error::Length {
            expected: pos + PIXELS,
            found: bytes.len(),
        });
    }
    ImageVec::from_bytes(&raster[..PIXELS])
}

fn pgm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err(Error::Format("PGM header truncated".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn pgm_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = pgm_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad PGM header field {:?}", String::from_utf8_lossy(tok))))
}
