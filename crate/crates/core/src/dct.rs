//! Orthonormal 2D DCT-II and its inverse (DCT-III).
//!
//! Direct separable evaluation against a precomputed cosine table:
//! O(W*H*(W+H)) per transform, which is fine for inspection-sized rasters.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// `table[k * n + i] = s_k * cos(pi * (2i + 1) * k / (2n))`.
struct Basis {
    n: usize,
    table: Vec<f64>,
}

impl Basis {
    fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n * n);
        let s0 = (1.0 / n as f64).sqrt();
        let sk = (2.0 / n as f64).sqrt();
        for k in 0..n {
            let s = if k == 0 { s0 } else { sk };
            for i in 0..n {
                let angle = PI * ((2 * i + 1) * k) as f64 / (2 * n) as f64;
                table.push(s * angle.cos());
            }
        }
        Self { n, table }
    }

    fn forward(&self, input: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            *o = row.iter().zip(input).map(|(c, x)| c * x).sum();
        }
    }

    fn inverse(&self, input: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (k, x) in input.iter().enumerate() {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            for (o, c) in out.iter_mut().zip(row) {
                *o += c * x;
            }
        }
    }
}

/// Orthonormal 1D DCT-II.
pub fn dct1(input: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    if !input.is_empty() {
        Basis::new(input.len()).forward(input, &mut out);
    }
    out
}

/// Orthonormal 1D DCT-III, the inverse of [`dct1`].
pub fn idct1(input: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; input.len()];
    if !input.is_empty() {
        Basis::new(input.len()).inverse(input, &mut out);
    }
    out
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn transform(raster: &Raster<f64>, dir: Direction) -> Result<Raster<f64>> {
    if raster.is_empty() {
        return Err(Error::EmptyRaster);
    }
    let (w, h) = (raster.width(), raster.height());
    let apply = |basis: &Basis, input: &[f64], out: &mut [f64]| match dir {
        Direction::Forward => basis.forward(input, out),
        Direction::Inverse => basis.inverse(input, out),
    };

    // rows
    let row_basis = Basis::new(w);
    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w)
        .zip(raster.as_slice().par_chunks(w))
        .for_each(|(out, input)| apply(&row_basis, input, out));

    // columns, via a transposed copy
    let col_basis = Basis::new(h);
    let mut transposed = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            transposed[x * h + y] = rows[y * w + x];
        }
    }
    let mut cols = vec![0.0; w * h];
    cols.par_chunks_mut(h)
        .zip(transposed.par_chunks(h))
        .for_each(|(out, input)| apply(&col_basis, input, out));

    let mut data = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            data[y * w + x] = cols[x * h + y];
        }
    }
    Raster::from_vec(w, h, data)
}

/// Orthonormal 2D DCT-II.
pub fn dct2(raster: &Raster<f64>) -> Result<Raster<f64>> {
    transform(raster, Direction::Forward)
}

/// Orthonormal 2D DCT-III; `idct2(dct2(x)) == x` up to rounding.
pub fn idct2(coefficients: &Raster<f64>) -> Result<Raster<f64>> {
    transform(coefficients, Direction::Inverse)
}
