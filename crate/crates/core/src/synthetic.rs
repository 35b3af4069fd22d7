//! Procedurally drawn digit-like images.
//!
//! Ten seven-segment style glyph classes, rendered with per-sample jitter in
//! position, stroke width and segment endpoints. They stand in for MNIST in
//! unit tests and in the examples when no IDX files are supplied; they are not
//! a substitute for MNIST when measuring classifier error.

use rand::Rng;

use crate::mnist::{ImageVec, LabeledDataset, SIDE};
use crate::rng::RngStream;

// Segment endpoints on a unit box: (x0, y0, x1, y1), y pointing down.
const A: [f64; 4] = [0.0, 0.0, 1.0, 0.0];
const B: [f64; 4] = [1.0, 0.0, 1.0, 0.5];
const C: [f64; 4] = [1.0, 0.5, 1.0, 1.0];
const D: [f64; 4] = [0.0, 1.0, 1.0, 1.0];
const E: [f64; 4] = [0.0, 0.5, 0.0, 1.0];
const F: [f64; 4] = [0.0, 0.0, 0.0, 0.5];
const G: [f64; 4] = [0.0, 0.5, 1.0, 0.5];
const DIAG: [f64; 4] = [1.0, 0.0, 0.2, 1.0];

fn segments(class: u8) -> &'static [[f64; 4]] {
    match class {
        0 => &[A, B, C, D, E, F],
        1 => &[B, C],
        2 => &[A, B, G, E, D],
        3 => &[A, B, G, C, D],
        4 => &[F, G, B, C],
        5 => &[A, F, G, C, D],
        6 => &[A, F, G, E, C, D],
        7 => &[A, DIAG],
        8 => &[A, B, C, D, E, F, G],
        _ => &[A, B, F, G, C, D],
    }
}

fn segment_distance(px: f64, py: f64, s: &[f64; 4]) -> f64 {
    let (dx, dy) = (s[2] - s[0], s[3] - s[1]);
    let len2 = dx * dx + dy * dy;
    let t = (((px - s[0]) * dx + (py - s[1]) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (s[0] + t * dx, s[1] + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// One glyph of `class`, jittered by `rng`.
pub fn draw_digit(class: u8, rng: &mut RngStream) -> ImageVec {
    let width = rng.random_range(9.0..13.0);
    let height = rng.random_range(15.0..19.0);
    let x0 = (SIDE as f64 - width) / 2.0 + rng.random_range(-2.0..2.0);
    let y0 = (SIDE as f64 - height) / 2.0 + rng.random_range(-2.0..2.0);
    let stroke = rng.random_range(1.0..1.8);
    let slant = rng.random_range(-0.15..0.15);

    let segs: Vec<[f64; 4]> = segments(class)
        .iter()
        .map(|s| {
            let mut p = *s;
            for v in &mut p {
                *v += rng.random_range(-0.04..0.04);
            }
            let place = |x: f64, y: f64| (x0 + x * width + slant * (0.5 - y) * height, y0 + y * height);
            let (a, b) = (place(p[0], p[1]), place(p[2], p[3]));
            [a.0, a.1, b.0, b.1]
        })
        .collect();

    let mut pixels = Vec::with_capacity(SIDE * SIDE);
    for r in 0..SIDE {
        for c in 0..SIDE {
            let (px, py) = (c as f64 + 0.5, r as f64 + 0.5);
            let d = segs.iter().map(|s| segment_distance(px, py, s)).fold(f64::INFINITY, f64::min);
            pixels.push((stroke + 0.5 - d).clamp(0.0, 1.0));
        }
    }
    ImageVec::new(pixels).expect("clamped into [0,1]")
}

/// `n` glyphs with labels cycling through the ten classes.
pub fn synthetic_digits(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = RngStream::new(seed, 0x5917);
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    let images = labels.iter().map(|&l| draw_digit(l, &mut rng)).collect();
    LabeledDataset::new(images, labels).expect("labels are 0..=9")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyphs_are_valid_and_distinct() {
        let data = synthetic_digits(20, 1);
        assert_eq!(data.len(), 20);
        for img in data.images() {
            let ink: f64 = img.pixels().iter().sum();
            assert!(ink > 20.0 && ink < 400.0, "ink {ink}");
        }
        assert_ne!(data.images()[1], data.images()[11]);
        assert_eq!(synthetic_digits(5, 3).images(), synthetic_digits(5, 3).images());
    }
}
