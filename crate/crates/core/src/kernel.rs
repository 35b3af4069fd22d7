//! Dense row-major matrix/vector arithmetic.
//!
//! Every dot product in the crate goes through [`dot`], which accumulates in
//! [`LANES`] interleaved partial sums and combines them in a fixed order. The
//! batched kernels use the same accumulation order per sample, so a batched
//! forward pass is bit-identical to running the samples one at a time.

use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Number of interleaved partial sums in [`dot`].
pub const LANES: usize = 8;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(
                "matrix",
                format!("{rows}x{cols}"),
                "non-empty dimensions",
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                "matrix",
                format!("{rows}x{cols}"),
                format!("data of length {}", data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("matrix", "ragged rows", format!("{cols} columns")));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            data.extend((0..self.rows).map(|i| self.get(i, j)));
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    fn dims(&self) -> String {
        format!("matrix {}x{}", self.rows, self.cols)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

/// A dense vector of 64-bit reals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Dot product with a fixed, lane-interleaved summation order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = fold_lanes(&acc);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn fold_lanes(acc: &[f64; LANES]) -> f64 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `W x + b`
pub fn affine(w: &Matrix, x: &[f64], b: &[f64]) -> Result<Vector> {
    if w.cols != x.len() {
        return Err(Error::shape("affine", w.dims(), format!("input of length {}", x.len())));
    }
    if w.rows != b.len() {
        return Err(Error::shape("affine", w.dims(), format!("bias of length {}", b.len())));
    }
    Ok((0..w.rows).map(|i| dot(w.row(i), x) + b[i]).collect())
}

/// `Wᵀ y`, accumulated row by row in ascending row order.
pub fn affine_transpose(w: &Matrix, y: &[f64]) -> Result<Vector> {
    if w.rows != y.len() {
        return Err(Error::shape(
            "affine_transpose",
            w.dims(),
            format!("vector of length {}", y.len()),
        ));
    }
    let mut out = Vector::zeros(w.cols);
    for (i, &yi) in y.iter().enumerate() {
        axpy(yi, w.row(i), &mut out);
    }
    Ok(out)
}

/// `G[i,j] += scale * d[i] * x[j]`, in place.
pub fn outer_accumulate(g: &mut Matrix, d: &[f64], x: &[f64], scale: f64) -> Result<()> {
    if g.rows != d.len() || g.cols != x.len() {
        return Err(Error::shape(
            "outer_accumulate",
            g.dims(),
            format!("outer product {}x{}", d.len(), x.len()),
        ));
    }
    for (i, &di) in d.iter().enumerate() {
        axpy(scale * di, x, g.row_mut(i));
    }
    Ok(())
}

/// Batched [`affine`]: `out[k] = W xs[k] + b` for each of the `batch` samples
/// stored contiguously in `xs`. Shapes are checked by the caller.
///
/// Samples are processed in blocks small enough to stay cache-resident while
/// each weight row is swept across the whole block.
pub(crate) fn affine_batch(w: &Matrix, b: &[f64], xs: &[f64], out: &mut [f64]) {
    const GROUP: usize = 4;
    const BLOCK: usize = 32;
    let (rows, cols) = (w.rows, w.cols);
    let batch = xs.len() / cols;
    debug_assert_eq!(out.len(), batch * rows);
    let mut start = 0;
    while start < batch {
        let end = (start + BLOCK).min(batch);
        for i in 0..rows {
            let wi = w.row(i);
            let mut k = start;
            while k + GROUP <= end {
                let x: [&[f64]; GROUP] = std::array::from_fn(|g| &xs[(k + g) * cols..(k + g + 1) * cols]);
                let s = dot4(wi, x);
                for g in 0..GROUP {
                    out[(k + g) * rows + i] = s[g] + b[i];
                }
                k += GROUP;
            }
            for k in k..end {
                out[k * rows + i] = dot(wi, &xs[k * cols..(k + 1) * cols]) + b[i];
            }
        }
        start = end;
    }
}

/// Four dot products against one shared row; same order as [`dot`].
#[inline]
fn dot4(w: &[f64], x: [&[f64]; 4]) -> [f64; 4] {
    let mut acc = [[0.0f64; LANES]; 4];
    let full = w.len() / LANES * LANES;
    let mut c = 0;
    while c < full {
        let wc = &w[c..c + LANES];
        for g in 0..4 {
            let xc = &x[g][c..c + LANES];
            for l in 0..LANES {
                acc[g][l] += wc[l] * xc[l];
            }
        }
        c += LANES;
    }
    let mut s = [0.0; 4];
    for g in 0..4 {
        s[g] = fold_lanes(&acc[g]);
        for j in full..w.len() {
            s[g] += w[j] * x[g][j];
        }
    }
    s
}

/// Batched [`affine_transpose`]: `out[k] = Wᵀ ys[k]`.
pub(crate) fn affine_transpose_batch(w: &Matrix, ys: &[f64], out: &mut [f64]) {
    let (rows, cols) = (w.rows, w.cols);
    let batch = ys.len() / rows;
    debug_assert_eq!(out.len(), batch * cols);
    out.fill(0.0);
    for i in 0..rows {
        let wi = w.row(i);
        for k in 0..batch {
            axpy(ys[k * rows + i], wi, &mut out[k * cols..(k + 1) * cols]);
        }
    }
}

/// Overwrites `g` with `Σ_k (scale·ds[k][i])·xs[k][j]`, summing samples in order.
/// Equivalent to zeroing `g` and calling [`outer_accumulate`] once per sample.
pub(crate) fn outer_batch(g: &mut Matrix, ds: &[f64], xs: &[f64], scale: f64) {
    let (rows, cols) = (g.rows, g.cols);
    let batch = ds.len() / rows;
    debug_assert_eq!(xs.len(), batch * cols);
    for i in 0..rows {
        let gi = g.row_mut(i);
        gi.fill(0.0);
        for k in 0..batch {
            axpy(scale * ds[k * rows + i], &xs[k * cols..(k + 1) * cols], gi);
        }
    }
}

/// Running mean / population-variance accumulator (Welford, with Chan's merge).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push_slice(&mut self, values: &[f64]) {
        if values.is_empty() {
            return;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        self.merge(RunningStats {
            n: values.len() as u64,
            mean,
            m2,
        });
    }

    pub fn merge(&mut self, other: RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// `(mean, population std)`.
    pub fn finish(&self) -> Result<(f64, f64)> {
        if self.n < 2 {
            return Err(Error::Degenerate(format!(
                "statistics need at least 2 values, got {}",
                self.n
            )));
        }
        Ok((self.mean, (self.m2 / self.n as f64).max(0.0).sqrt()))
    }
}

/// Mean and population standard deviation over one slice.
pub fn reduce_stats(values: &[f64]) -> Result<(f64, f64)> {
    reduce_stats_chunks(std::iter::once(values))
}

/// Mean and population standard deviation over the concatenation of `chunks`.
pub fn reduce_stats_chunks<'a, I>(chunks: I) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = RunningStats::default();
    for c in chunks {
        acc.push_slice(c);
    }
    acc.finish()
}
