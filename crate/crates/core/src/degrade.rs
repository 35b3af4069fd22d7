//! Image degradation: random pixel replacement and rectangular zeroing.
//!
//! Replacement is not additive noise. Chosen pixels are overwritten with a
//! fresh intensity; every other pixel is left bit-identical.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mnist::{DatasetStats, ImageVec, PIXELS, SIDE};
use crate::rng::RngStream;

/// An axis-aligned pixel rectangle, `height × width` starting at `(row0, col0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn new(row0: usize, col0: usize, height: usize, width: usize) -> Result<Self> {
        let r = Rect {
            row0,
            col0,
            height,
            width,
        };
        if height == 0 || width == 0 {
            return Err(Error::Bounds(format!("{r} has zero area")));
        }
        if row0 + height > SIDE || col0 + width > SIDE {
            return Err(Error::Bounds(format!("{r} exceeds the {SIDE}x{SIDE} grid")));
        }
        Ok(r)
    }

    /// 10×10 block over rows and columns 9–18: 100 of 784 pixels (12.8%).
    pub fn central_default() -> Self {
        Rect {
            row0: 9,
            col0: 9,
            height: 10,
            width: 10,
        }
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    /// Row-major pixel indices covered by the rectangle.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (self.row0..self.row0 + self.height)
            .flat_map(move |r| (self.col0..self.col0 + self.width).map(move |c| r * SIDE + c))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.row0, self.col0, self.height, self.width)
    }
}

/// Parses `r0,c0,h,w`.
impl FromStr for Rect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Bounds(format!("rect {s:?} is not r0,c0,h,w")))?;
        match parts[..] {
            [r0, c0, h, w] => Rect::new(r0, c0, h, w),
            _ => Err(Error::Bounds(format!("rect {s:?} is not r0,c0,h,w"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegradeMode {
    /// Replace `round(p·784)` random pixels, `p ∈ [0,1]`.
    RandomReplace(f64),
    RegionZero(Rect),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeSpec {
    pub mode: DegradeMode,
    pub stats: DatasetStats,
}

impl DegradeSpec {
    pub fn new(mode: DegradeMode, stats: DatasetStats) -> Result<Self> {
        if let DegradeMode::RandomReplace(p) = mode {
            check_proportion(p)?;
        }
        Ok(DegradeSpec { mode, stats })
    }

    pub fn apply(&self, img: &ImageVec, rng: &mut RngStream) -> Result<ImageVec> {
        match self.mode {
            DegradeMode::RandomReplace(p) => random_replace(img, p, &self.stats, rng),
            DegradeMode::RegionZero(rect) => Ok(region_zero(img, &rect)),
        }
    }
}

pub(crate) fn check_proportion(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("proportion {p} outside [0,1]")))
    }
}

/// Number of pixels replaced at proportion `p`.
pub fn replacement_count(p: f64) -> usize {
    (p * PIXELS as f64).round() as usize
}

/// One draw from `Normal(mean, std)` clamped to `[0,1]`.
pub fn sample_intensity(stats: &DatasetStats, rng: &mut RngStream) -> f64 {
    if stats.std == 0.0 {
        return stats.mean;
    }
    let normal = Normal::new(stats.mean, stats.std).expect("std is finite and positive");
    normal.sample(rng).clamp(0.0, 1.0)
}

/// Replaces exactly `round(p·784)` distinct, uniformly chosen pixels with
/// [`sample_intensity`] draws.
pub fn random_replace(img: &ImageVec, p: f64, stats: &DatasetStats, rng: &mut RngStream) -> Result<ImageVec> {
    check_proportion(p)?;
    let mut pixels = img.pixels().to_vec();
    for i in index::sample(rng, PIXELS, replacement_count(p)) {
        pixels[i] = sample_intensity(stats, rng);
    }
    Ok(ImageVec::from_unit_interval(pixels))
}

/// Sets every pixel inside `rect` to 0.
pub fn region_zero(img: &ImageVec, rect: &Rect) -> ImageVec {
    let mut pixels = img.pixels().to_vec();
    for i in rect.indices() {
        pixels[i] = 0.0;
    }
    ImageVec::from_unit_interval(pixels)
}
