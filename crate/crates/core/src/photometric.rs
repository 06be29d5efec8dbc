//! Calibrated Lambertian photometric stereo.
//!
//! Each pixel observes `I_k = rho * (n . l_k)` under light `k`. Stacking the
//! K observations gives the linear system `L m = I` with `m = rho * n`,
//! solved per pixel in the least-squares sense. Albedo is `|m|` and the
//! normal is `m / |m|`.
//!
//! Frames are in raster orientation: `x` grows rightward, `y` grows
//! downward, `z` points out of the wafer toward the camera.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Samples at or below this intensity are treated as shadowed.
pub const DEFAULT_SHADOW_THRESHOLD: f64 = 0.01;

/// Albedo below which a pixel carries no recoverable orientation.
const MIN_ALBEDO: f64 = 1e-9;

/// Tolerance on `|l| == 1` for pre-normalized directions.
const UNIT_TOLERANCE: f64 = 1e-9;

/// Singular value ratio below which the light matrix counts as rank 2.
const RANK_TOLERANCE: f64 = 1e-9;

/// Normal recorded for masked pixels.
pub const SENTINEL_NORMAL: [f64; 3] = [0.0, 0.0, 1.0];

/// K co-registered grayscale frames with linear intensities in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ImageStack {
    frames: Vec<Raster<f64>>,
    pixel_pitch: f64,
}

impl ImageStack {
    pub fn new(frames: Vec<Raster<f64>>, pixel_pitch: f64) -> Result<Self> {
        if frames.len() < 3 {
            return Err(Error::TooFewImages { got: frames.len() });
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pixel pitch must be positive, got {pixel_pitch}"
            )));
        }
        let first = &frames[0];
        if first.is_empty() {
            return Err(Error::EmptyRaster);
        }
        for (k, frame) in frames.iter().enumerate() {
            if !frame.same_shape(first) {
                return Err(Error::ShapeMismatch(format!(
                    "frame {k} is {}x{}, frame 0 is {}x{}",
                    frame.width(),
                    frame.height(),
                    first.width(),
                    first.height()
                )));
            }
            if let Some(v) = frame
                .as_slice()
                .iter()
                .find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v)))
            {
                return Err(Error::InvalidParameter(format!(
                    "frame {k} has intensity {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            frames,
            pixel_pitch,
        })
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn count(&self) -> usize {
        self.frames.len()
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn frames(&self) -> &[Raster<f64>] {
        &self.frames
    }

    /// Multiplies every intensity by `s`; `s` must keep values in `[0, 1]`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let frames = self.frames.iter().map(|f| f.map(|v| v * s)).collect();
        Self::new(frames, self.pixel_pitch)
    }
}

/// Unit illumination directions, one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LightSet {
    directions: Vec<Vector3<f64>>,
}

impl LightSet {
    /// Accepts directions that are already unit length (within 1e-9).
    ///
    /// Each vector is renormalized so downstream code sees `|l| == 1` to
    /// the last bit.
    pub fn from_unit_vectors(directions: &[[f64; 3]]) -> Result<Self> {
        let mut out = Vec::with_capacity(directions.len());
        for (index, d) in directions.iter().enumerate() {
            let v = Vector3::from(*d);
            let norm = v.norm();
            if !norm.is_finite() || norm < 1e-12 {
                return Err(Error::ZeroVector { index });
            }
            if (norm - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::InvalidParameter(format!(
                    "light {index} has norm {norm}, expected 1"
                )));
            }
            if v.z <= 0.0 {
                return Err(Error::BelowPlane { index, z: v.z });
            }
            out.push(v / norm);
        }
        Ok(Self { directions: out })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vector3<f64>] {
        &self.directions
    }

    pub fn to_arrays(&self) -> Vec<[f64; 3]> {
        self.directions.iter().map(|d| [d.x, d.y, d.z]).collect()
    }

    /// Whether the K x 3 direction matrix has full column rank.
    pub fn has_full_rank(&self) -> bool {
        if self.directions.len() < 3 {
            return false;
        }
        let l = self.matrix();
        let sv = l.singular_values();
        let max = sv.max();
        let min = sv.min();
        max > 0.0 && min / max > RANK_TOLERANCE
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.directions.len(), 3, |r, c| self.directions[r][c])
    }
}

/// Turns raw light positions (millimeters, relative to the sample center)
/// into unit directions, preserving order.
pub fn normalize_lights(raw_positions: &[[f64; 3]]) -> Result<LightSet> {
    let mut directions = Vec::with_capacity(raw_positions.len());
    for (index, p) in raw_positions.iter().enumerate() {
        let v = Vector3::from(*p);
        let norm = v.norm();
        if !(norm >= 1e-12) {
            return Err(Error::ZeroVector { index });
        }
        if v.z <= 0.0 {
            return Err(Error::BelowPlane { index, z: v.z });
        }
        directions.push(v / norm);
    }
    Ok(LightSet { directions })
}

/// Per-pixel unit normals, albedo and validity.
#[derive(Debug, Clone)]
pub struct NormalField {
    pub normals: Raster<[f64; 3]>,
    pub albedo: Raster<f64>,
    pub mask: Raster<bool>,
}

impl NormalField {
    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    pub fn valid_count(&self) -> usize {
        self.mask.as_slice().iter().filter(|m| **m).count()
    }
}

/// Surface slopes `p = dz/dx`, `q = dz/dy` in rise per pixel pitch.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub p: Raster<f64>,
    pub q: Raster<f64>,
    pub mask: Raster<bool>,
}

impl GradientField {
    /// Builds a fully valid field; `p` and `q` must share a shape.
    pub fn new(p: Raster<f64>, q: Raster<f64>) -> Result<Self> {
        if !p.same_shape(&q) {
            return Err(Error::ShapeMismatch("p and q differ in shape".into()));
        }
        let mask = Raster::filled(p.width(), p.height(), true);
        Ok(Self { p, q, mask })
    }

    pub fn width(&self) -> usize {
        self.p.width()
    }

    pub fn height(&self) -> usize {
        self.p.height()
    }
}

enum PixelSolve {
    Valid([f64; 3], f64),
    Masked,
}

/// Least-squares normals and albedo for every pixel of `stack`.
///
/// A pixel is masked when fewer than three of its samples exceed
/// `shadow_threshold`, when its albedo is below 1e-9, or when `albedo * nz`
/// does not exceed `shadow_threshold` (a facet too steep to resolve).
/// Samples at or below the threshold are dropped from that pixel's solve;
/// with exactly three left the solve is the plain 3x3 inversion of those.
pub fn estimate_normals(
    stack: &ImageStack,
    lights: &LightSet,
    shadow_threshold: f64,
) -> Result<NormalField> {
    if stack.count() != lights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} frames but {} lights",
            stack.count(),
            lights.len()
        )));
    }
    if !lights.has_full_rank() {
        return Err(Error::RankDeficientLights);
    }
    let k = lights.len();
    let dirs = lights.directions();
    let pinv = lights
        .matrix()
        .pseudo_inverse(0.0)
        .map_err(|_| Error::RankDeficientLights)?;

    let (w, h) = (stack.width(), stack.height());
    let frames = stack.frames();

    let solved: Vec<PixelSolve> = (0..w * h)
        .into_par_iter()
        .map_init(
            || vec![0.0; k],
            |samples, idx| {
                for (s, frame) in samples.iter_mut().zip(frames) {
                    *s = frame.as_slice()[idx];
                }
                let lit = samples.iter().filter(|v| **v > shadow_threshold).count();
                if lit < 3 {
                    return PixelSolve::Masked;
                }
                let m = if lit < k {
                    match solve_subset(dirs, samples, shadow_threshold) {
                        Some(m) => m,
                        None => return PixelSolve::Masked,
                    }
                } else {
                    let mut m = Vector3::zeros();
                    for (j, s) in samples.iter().enumerate() {
                        m += pinv.column(j) * *s;
                    }
                    m
                };
                let rho = m.norm();
                if !(rho >= MIN_ALBEDO) {
                    return PixelSolve::Masked;
                }
                let n = m / rho;
                // rho * nz is what an overhead light would record; at or
                // below the threshold the tilt is not resolvable
                if n.z <= 0.0 || m.z <= shadow_threshold {
                    return PixelSolve::Masked;
                }
                PixelSolve::Valid([n.x, n.y, n.z], rho)
            },
        )
        .collect();

    let mut normals = Raster::filled(w, h, SENTINEL_NORMAL);
    let mut albedo = Raster::zeros(w, h);
    let mut mask = Raster::filled(w, h, false);
    for (idx, s) in solved.into_iter().enumerate() {
        if let PixelSolve::Valid(n, rho) = s {
            normals.as_mut_slice()[idx] = n;
            albedo.as_mut_slice()[idx] = rho;
            mask.as_mut_slice()[idx] = true;
        }
    }
    Ok(NormalField {
        normals,
        albedo,
        mask,
    })
}

/// Normal equations restricted to the lit samples.
fn solve_subset(dirs: &[Vector3<f64>], samples: &[f64], threshold: f64) -> Option<Vector3<f64>> {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (l, s) in dirs.iter().zip(samples) {
        if *s > threshold {
            ata += l * l.transpose();
            atb += l * *s;
        }
    }
    let scale = ata.trace();
    if ata.determinant() <= 1e-12 * scale * scale * scale {
        return None;
    }
    ata.cholesky().map(|c| c.solve(&atb))
}

/// Converts normals to slopes with `n ∝ (-p, -q, 1)`; masked pixels get 0.
pub fn normals_to_gradients(field: &NormalField) -> GradientField {
    let (w, h) = (field.width(), field.height());
    let mut p = Raster::zeros(w, h);
    let mut q = Raster::zeros(w, h);
    for (idx, (n, valid)) in field
        .normals
        .as_slice()
        .iter()
        .zip(field.mask.as_slice())
        .enumerate()
    {
        if *valid && n[2] > 0.0 {
            p.as_mut_slice()[idx] = -n[0] / n[2];
            q.as_mut_slice()[idx] = -n[1] / n[2];
        }
    }
    GradientField {
        p,
        q,
        mask: field.mask.clone(),
    }
}

/// Angle in radians between two unit vectors, robust near zero.
pub fn angular_error(a: [f64; 3], b: [f64; 3]) -> f64 {
    let a = Vector3::from(a);
    let b = Vector3::from(b);
    a.cross(&b).norm().atan2(a.dot(&b))
}
