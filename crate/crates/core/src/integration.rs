//! Gradient-field integration by a DCT Poisson solver.
//!
//! The depth `z` is recovered from `lap(z) = div(p, q)` with homogeneous
//! Neumann boundaries. The orthonormal DCT-II diagonalizes the 5-point
//! Laplacian with mirrored borders, so the solve is a per-coefficient
//! division followed by an inverse transform. The result is then detrended:
//! the least-squares plane is removed and the minimum shifted to zero.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::dct::{dct2, idct2};
use crate::error::{Error, Result};
use crate::photometric::GradientField;
use crate::raster::Raster;

/// Surface height in micrometers on a square pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub z: Raster<f64>,
    pub pixel_pitch: f64,
}

impl DepthMap {
    pub fn new(z: Raster<f64>, pixel_pitch: f64) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::EmptyRaster);
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pixel pitch must be positive, got {pixel_pitch}"
            )));
        }
        if !z.all_finite() {
            return Err(Error::InvalidParameter(
                "depth map has non-finite values".into(),
            ));
        }
        Ok(Self { z, pixel_pitch })
    }

    pub fn width(&self) -> usize {
        self.z.width()
    }

    pub fn height(&self) -> usize {
        self.z.height()
    }

    pub fn peak_to_valley(&self) -> f64 {
        self.z.max() - self.z.min()
    }

    /// Sub-map sharing this map's pitch.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> DepthMap {
        DepthMap {
            z: self.z.crop(x0, y0, width, height),
            pixel_pitch: self.pixel_pitch,
        }
    }

    /// Splits the map into an even `cols x rows` grid of tiles, row-major.
    pub fn tiles(&self, cols: usize, rows: usize) -> Vec<DepthMap> {
        let tw = self.width() / cols.max(1);
        let th = self.height() / rows.max(1);
        let mut out = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                out.push(self.crop(c * tw, r * th, tw, th));
            }
        }
        out
    }
}

/// `dp/dx + dq/dy` on the unit pixel grid: central differences inside,
/// one-sided differences on the border.
pub fn divergence(grad: &GradientField) -> Raster<f64> {
    let (w, h) = (grad.width(), grad.height());
    let mut f = Raster::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let dpdx = axis_derivative(w, x, |i| grad.p.at(i, y));
            let dqdy = axis_derivative(h, y, |j| grad.q.at(x, j));
            *f.get_mut(x, y) = dpdx + dqdy;
        }
    }
    f
}

fn axis_derivative(len: usize, i: usize, v: impl Fn(usize) -> f64) -> f64 {
    if len < 2 {
        0.0
    } else if i == 0 {
        v(1) - v(0)
    } else if i == len - 1 {
        v(len - 1) - v(len - 2)
    } else {
        0.5 * (v(i + 1) - v(i - 1))
    }
}

/// Right-hand side of the least-squares integration problem.
///
/// Equal to [`divergence`] inside the raster. Border rows carry the flux
/// of the averaged edge slopes, `(p0 + p1) / 2` on the low side and
/// `-(p[n-2] + p[n-1]) / 2` on the high side, so the source always sums to
/// zero and the Neumann solve reproduces every integrable field.
pub fn neumann_source(grad: &GradientField) -> Raster<f64> {
    let (w, h) = (grad.width(), grad.height());
    Raster::from_fn(w, h, |x, y| {
        flux_derivative(w, x, |i| grad.p.at(i, y)) + flux_derivative(h, y, |j| grad.q.at(x, j))
    })
}

fn flux_derivative(len: usize, i: usize, v: impl Fn(usize) -> f64) -> f64 {
    let edge = |k: usize| 0.5 * (v(k) + v(k + 1));
    let high = if i + 1 < len { edge(i) } else { 0.0 };
    let low = if i > 0 { edge(i - 1) } else { 0.0 };
    high - low
}

/// 5-point Laplacian with mirrored (Neumann) borders.
pub fn laplacian(z: &Raster<f64>) -> Raster<f64> {
    let (w, h) = (z.width(), z.height());
    Raster::from_fn(w, h, |x, y| {
        let c = z.at(x, y);
        let left = z.at(x.saturating_sub(1), y);
        let right = z.at((x + 1).min(w - 1), y);
        let up = z.at(x, y.saturating_sub(1));
        let down = z.at(x, (y + 1).min(h - 1));
        left + right + up + down - 4.0 * c
    })
}

/// Solves `laplacian(z) = f` under Neumann boundaries.
///
/// The DC coefficient is pinned to zero, so the returned `z` has zero mean
/// and satisfies the equation for `f - mean(f)`; when `f` sums to zero, as
/// a compatible Neumann source must, the residual vanishes.
pub fn poisson_solve(f: &Raster<f64>) -> Result<Raster<f64>> {
    let (w, h) = (f.width(), f.height());
    let mut coeffs = dct2(f)?;
    let cos_x: Vec<f64> = (0..w)
        .map(|u| 2.0 * (PI * u as f64 / w as f64).cos())
        .collect();
    let cos_y: Vec<f64> = (0..h)
        .map(|v| 2.0 * (PI * v as f64 / h as f64).cos())
        .collect();
    for (v, cy) in cos_y.iter().enumerate() {
        for (u, cx) in cos_x.iter().enumerate() {
            let c = coeffs.get_mut(u, v);
            if u == 0 && v == 0 {
                *c = 0.0;
            } else {
                *c /= cx + cy - 4.0;
            }
        }
    }
    idct2(&coeffs)
}

/// Removes the least-squares plane fitted over `mask` (all pixels when
/// `None`), then shifts the raster so its minimum is exactly zero.
pub fn detrend(z: &Raster<f64>, mask: Option<&Raster<bool>>, pixel_pitch: f64) -> Result<DepthMap> {
    if z.is_empty() {
        return Err(Error::EmptyRaster);
    }
    if let Some(m) = mask {
        if !m.same_shape(z) {
            return Err(Error::ShapeMismatch(
                "mask and depth differ in shape".into(),
            ));
        }
    }
    let (a, b, c) = fit_plane(z, mask)?;
    let mut out = Raster::from_fn(z.width(), z.height(), |x, y| {
        z.at(x, y) - (a * x as f64 + b * y as f64 + c)
    });
    let min = out.min();
    for v in out.as_mut_slice() {
        *v -= min;
    }
    DepthMap::new(out, pixel_pitch)
}

/// Least-squares `(a, b, c)` for `z ≈ a x + b y + c` over valid pixels.
pub fn fit_plane(z: &Raster<f64>, mask: Option<&Raster<bool>>) -> Result<(f64, f64, f64)> {
    let valid = |x: usize, y: usize| mask.is_none_or(|m| m.at(x, y));
    let (w, h) = (z.width(), z.height());

    // centered coordinates keep the normal equations well conditioned
    let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            if valid(x, y) {
                n += 1.0;
                sx += x as f64;
                sy += y as f64;
            }
        }
    }
    if n < 3.0 {
        return Err(Error::DegenerateFit);
    }
    let (mx, my) = (sx / n, sy / n);
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for y in 0..h {
        for x in 0..w {
            if valid(x, y) {
                let row = Vector3::new(x as f64 - mx, y as f64 - my, 1.0);
                ata += row * row.transpose();
                atb += row * z.at(x, y);
            }
        }
    }
    // collinear support <=> singular coordinate scatter
    let sxx = ata[(0, 0)];
    let syy = ata[(1, 1)];
    let sxy = ata[(0, 1)];
    let det = sxx * syy - sxy * sxy;
    if !(det > 1e-9 * (sxx + syy).powi(2)) {
        return Err(Error::DegenerateFit);
    }
    let sol = ata.cholesky().ok_or(Error::DegenerateFit)?.solve(&atb);
    let (a, b) = (sol[0], sol[1]);
    Ok((a, b, sol[2] - a * mx - b * my))
}

/// Gradients to detrended depth: Poisson source, Poisson solve, scale by
/// the pixel pitch (slopes are per pixel), then detrend over the valid mask.
pub fn integrate(grad: &GradientField, pixel_pitch: f64) -> Result<DepthMap> {
    if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pixel pitch must be positive, got {pixel_pitch}"
        )));
    }
    let f = neumann_source(grad);
    let mut z = poisson_solve(&f)?;
    for v in z.as_mut_slice() {
        *v *= pixel_pitch;
    }
    detrend(&z, Some(&grad.mask), pixel_pitch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn field(
        w: usize,
        h: usize,
        p: impl Fn(usize, usize) -> f64,
        q: impl Fn(usize, usize) -> f64,
    ) -> GradientField {
        GradientField::new(Raster::from_fn(w, h, p), Raster::from_fn(w, h, q)).unwrap()
    }

    #[test]
    fn divergence_of_constant_fields_is_zero() {
        let f = divergence(&field(6, 4, |_, _| 0.0, |_, _| 0.0));
        assert_eq!(f.max_abs_diff(&Raster::zeros(6, 4)), 0.0);
        let f = divergence(&field(6, 4, |_, _| 0.1, |_, _| 0.0));
        assert!(f.max_abs_diff(&Raster::zeros(6, 4)) < 1e-15);
    }

    #[test]
    fn divergence_of_identity_ramp() {
        // p = x: (x+1 - (x-1)) / 2 = 1 everywhere inside, and the one-sided
        // border differences are also exactly 1
        let f = divergence(&field(5, 5, |x, _| x as f64, |_, _| 0.0));
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(f.at(x, y), 1.0);
            }
        }
    }

    #[test]
    fn neumann_source_matches_divergence_inside_and_sums_to_zero() {
        let g = field(
            7,
            6,
            |x, y| ((x * x + y) % 5) as f64 * 0.1,
            |x, y| (x as f64 - y as f64) * 0.2,
        );
        let d = divergence(&g);
        let s = neumann_source(&g);
        for y in 1..5 {
            for x in 1..6 {
                assert_abs_diff_eq!(d.at(x, y), s.at(x, y), epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(s.as_slice().iter().sum::<f64>(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_surface_is_recovered() {
        // z = 0.01 (x^2 + 2 y^2) has non-zero border slopes; the
        // flux-consistent source keeps them
        let (w, h) = (32, 24);
        let surf = |x: f64, y: f64| 0.01 * (x * x + 2.0 * y * y);
        let g = field(w, h, |x, _| 0.02 * x as f64, |_, y| 0.04 * y as f64);
        let d = integrate(&g, 1.0).unwrap();
        let truth = detrend(
            &Raster::from_fn(w, h, |x, y| surf(x as f64, y as f64)),
            None,
            1.0,
        )
        .unwrap();
        let pv = truth.peak_to_valley();
        assert!(d.z.max_abs_diff(&truth.z) < 0.01 * pv);
    }

    #[test]
    fn zero_source_gives_zero_depth() {
        let z = poisson_solve(&Raster::zeros(8, 6)).unwrap();
        assert!(z.max_abs_diff(&Raster::zeros(8, 6)) < 1e-15);
    }

    #[test]
    fn solve_satisfies_discrete_poisson() {
        let (w, h) = (9, 7);
        let mut f = Raster::from_fn(w, h, |x, y| ((x * 13 + y * 5) % 7) as f64 - 2.0);
        let mean = f.mean();
        for v in f.as_mut_slice() {
            *v -= mean;
        }
        let z = poisson_solve(&f).unwrap();
        assert!(laplacian(&z).max_abs_diff(&f) < 1e-10);
        assert_abs_diff_eq!(z.mean(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_plane_detrends_to_zero() {
        let z = Raster::from_fn(6, 5, |x, y| 2.0 * x as f64 + 3.0 * y as f64 + 7.0);
        let d = detrend(&z, None, 1.0).unwrap();
        assert!(d.z.max_abs_diff(&Raster::zeros(6, 5)) < 1e-9);
    }

    #[test]
    fn single_spike_detrend_matches_lstsq() {
        let (w, h) = (5, 4);
        let z = Raster::from_fn(w, h, |x, y| if (x, y) == (3, 1) { 5.0 } else { 0.0 });
        // independent route: SVD least squares on the design matrix
        let a = DMatrix::from_fn(w * h, 3, |r, c| match c {
            0 => (r % w) as f64,
            1 => (r / w) as f64,
            _ => 1.0,
        });
        let b = nalgebra::DVector::from_column_slice(z.as_slice());
        let sol = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
        let resid = &b - &a * &sol;
        let min = resid.min();
        let d = detrend(&z, None, 1.0).unwrap();
        for (i, v) in d.z.as_slice().iter().enumerate() {
            assert_abs_diff_eq!(*v, resid[i] - min, epsilon = 1e-12);
        }
        assert_eq!(d.z.min(), 0.0);
    }

    #[test]
    fn masked_pixels_do_not_bias_the_plane() {
        let z = Raster::from_fn(6, 6, |x, y| {
            if x == 0 {
                100.0
            } else {
                0.5 * x as f64 - 0.25 * y as f64
            }
        });
        let mask = Raster::from_fn(6, 6, |x, _| x != 0);
        let (a, b, _) = fit_plane(&z, Some(&mask)).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, -0.25, epsilon = 1e-12);
    }

    #[test]
    fn collinear_support_is_degenerate() {
        let z = Raster::zeros(5, 1);
        assert!(matches!(detrend(&z, None, 1.0), Err(Error::DegenerateFit)));
        let mask = Raster::from_fn(4, 4, |x, y| x == y);
        assert!(matches!(
            detrend(&Raster::zeros(4, 4), Some(&mask), 1.0),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn integrate_zero_and_ramp() {
        let d = integrate(&field(8, 8, |_, _| 0.0, |_, _| 0.0), 0.5).unwrap();
        assert!(d.z.max_abs_diff(&Raster::zeros(8, 8)) < 1e-12);
        let d = integrate(&field(8, 8, |_, _| 0.3, |_, _| -0.2), 0.5).unwrap();
        assert!(d.z.max_abs_diff(&Raster::zeros(8, 8)) < 1e-9);
    }

    #[test]
    fn tiles_cover_grid() {
        let d = DepthMap::new(Raster::from_fn(4, 4, |x, y| (x + 4 * y) as f64), 1.0).unwrap();
        let t = d.tiles(2, 2);
        assert_eq!(t.len(), 4);
        assert_eq!(t[3].z.at(0, 0), 10.0);
    }
}
