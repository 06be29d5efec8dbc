//! Parametric via scenes with closed-form depth and normals, and a
//! Lambertian renderer for them.
//!
//! Height is 0 on the wafer surface and `-depth` on a via floor. Between
//! `radius_bottom` and the (possibly noise-perturbed) rim radius the wall
//! is either a straight taper or a cosine blend with zero slope at both
//! ends. Slopes are physical (micrometers per micrometer), which is also
//! rise per pixel pitch.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integration::DepthMap;
use crate::photometric::{ImageStack, LightSet, NormalField, SENTINEL_NORMAL};
use crate::raster::Raster;

/// Walls steeper than this (degrees from horizontal) are masked in the
/// ground-truth normal field.
pub const MAX_RECOVERABLE_WALL_DEG: f64 = 85.0;

const RIM_HARMONICS: usize = 8;
const RIM_SEED: u64 = 0x7ee1_5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WallProfile {
    #[default]
    StraightTaper,
    CosineRoundedRim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViaSpec {
    /// Micrometers, in raster coordinates (pixel `i` sits at `i * pitch`).
    pub center: [f64; 2],
    pub radius_top: f64,
    pub radius_bottom: f64,
    pub depth: f64,
    #[serde(default)]
    pub wall_profile: WallProfile,
    /// Peak azimuthal rim perturbation, micrometers.
    #[serde(default)]
    pub rim_noise_amplitude: f64,
}

impl ViaSpec {
    pub fn tapered(center: [f64; 2], radius_top: f64, radius_bottom: f64, depth: f64) -> Self {
        Self {
            center,
            radius_top,
            radius_bottom,
            depth,
            wall_profile: WallProfile::StraightTaper,
            rim_noise_amplitude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.center.iter().all(|c| c.is_finite())
            && self.radius_bottom > 0.0
            && self.radius_top >= self.radius_bottom
            && self.radius_top.is_finite()
            && self.depth > 0.0
            && self.depth.is_finite()
            && self.rim_noise_amplitude >= 0.0
            && self.rim_noise_amplitude.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid via {self:?}")))
        }
    }

    /// Largest radius the rim can reach.
    pub fn outer_radius(&self) -> f64 {
        self.radius_top + self.rim_noise_amplitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowModel {
    #[default]
    None,
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub vias: Vec<ViaSpec>,
    pub width: usize,
    pub height: usize,
    /// Micrometers per pixel.
    pub pixel_pitch: f64,
    #[serde(default = "unit_albedo")]
    pub albedo: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub shadow_model: ShadowModel,
}

fn unit_albedo() -> f64 {
    1.0
}

impl SceneSpec {
    pub fn flat(width: usize, height: usize, pixel_pitch: f64) -> Self {
        Self {
            vias: Vec::new(),
            width,
            height,
            pixel_pitch,
            albedo: 1.0,
            noise_sigma: 0.0,
            shadow_model: ShadowModel::None,
        }
    }

    /// One via centered in the raster.
    pub fn single(width: usize, height: usize, pixel_pitch: f64, mut via: ViaSpec) -> Self {
        via.center = [
            0.5 * (width - 1) as f64 * pixel_pitch,
            0.5 * (height - 1) as f64 * pixel_pitch,
        ];
        Self {
            vias: vec![via],
            ..Self::flat(width, height, pixel_pitch)
        }
    }

    /// Four copies of `via`, one centered in each quadrant.
    pub fn array_2x2(width: usize, height: usize, pixel_pitch: f64, via: &ViaSpec) -> Self {
        let mut vias = Vec::with_capacity(4);
        for row in 0..2 {
            for col in 0..2 {
                let mut v = via.clone();
                v.center = [
                    (col as f64 * 0.5 + 0.25) * width as f64 * pixel_pitch - 0.5 * pixel_pitch,
                    (row as f64 * 0.5 + 0.25) * height as f64 * pixel_pitch - 0.5 * pixel_pitch,
                ];
                vias.push(v);
            }
        }
        Self {
            vias,
            ..Self::flat(width, height, pixel_pitch)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::EmptyRaster);
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(Error::InvalidParameter(
                "pixel_pitch must be positive".into(),
            ));
        }
        if !(self.albedo > 0.0 && self.albedo <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "albedo {} outside (0, 1]",
                self.albedo
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(
                "noise_sigma must be non-negative".into(),
            ));
        }
        for v in &self.vias {
            v.validate()?;
        }
        for i in 0..self.vias.len() {
            for j in i + 1..self.vias.len() {
                let (a, b) = (&self.vias[i], &self.vias[j]);
                let d = (a.center[0] - b.center[0]).hypot(a.center[1] - b.center[1]);
                if d < a.outer_radius() + b.outer_radius() {
                    return Err(Error::OverlappingVias(i, j));
                }
            }
        }
        Ok(())
    }
}

/// Band-limited azimuthal rim perturbation with peak magnitude 1.
#[derive(Debug, Clone)]
struct RimNoise {
    terms: [(f64, f64); RIM_HARMONICS],
    scale: f64,
}

impl RimNoise {
    fn for_via(index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(RIM_SEED ^ index as u64);
        let mut terms = [(0.0, 0.0); RIM_HARMONICS];
        for (k, t) in terms.iter_mut().enumerate() {
            let amp = rng.random_range(0.5..1.0) / (k + 1) as f64;
            let phase = rng.random_range(0.0..TAU);
            *t = (amp, phase);
        }
        let mut noise = Self { terms, scale: 1.0 };
        let peak = (0..4096)
            .map(|i| noise.value(TAU * i as f64 / 4096.0).abs())
            .fold(0.0, f64::max);
        noise.scale = 1.0 / peak;
        noise
    }

    fn value(&self, phi: f64) -> f64 {
        self.scale
            * self
                .terms
                .iter()
                .enumerate()
                .map(|(k, (a, ph))| a * ((k + 1) as f64 * phi + ph).sin())
                .sum::<f64>()
    }

    fn derivative(&self, phi: f64) -> f64 {
        self.scale
            * self
                .terms
                .iter()
                .enumerate()
                .map(|(k, (a, ph))| {
                    let m = (k + 1) as f64;
                    a * m * (m * phi + ph).cos()
                })
                .sum::<f64>()
    }
}

/// Height and slope of the scene at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub z: f64,
    /// `(dz/dx, dz/dy)`; `None` on a vertical wall.
    pub slope: Option<(f64, f64)>,
    /// Outward horizontal direction, set on vertical walls.
    pub wall_dir: Option<(f64, f64)>,
}

impl SurfaceSample {
    const FLAT: SurfaceSample = SurfaceSample {
        z: 0.0,
        slope: Some((0.0, 0.0)),
        wall_dir: None,
    };

    /// Upward unit normal; horizontal and facing the via axis on vertical walls.
    pub fn normal(&self) -> [f64; 3] {
        match (self.slope, self.wall_dir) {
            (Some((p, q)), _) => {
                let s = (1.0 + p * p + q * q).sqrt();
                [-p / s, -q / s, 1.0 / s]
            }
            (None, Some((ux, uy))) => [-ux, -uy, 0.0],
            (None, None) => SENTINEL_NORMAL,
        }
    }
}

/// Closed-form scene geometry.
pub struct Surface<'a> {
    scene: &'a SceneSpec,
    rims: Vec<RimNoise>,
}

impl<'a> Surface<'a> {
    pub fn new(scene: &'a SceneSpec) -> Result<Self> {
        scene.validate()?;
        let rims = (0..scene.vias.len()).map(RimNoise::for_via).collect();
        Ok(Self { scene, rims })
    }

    fn rim(&self, index: usize, phi: f64) -> (f64, f64) {
        let via = &self.scene.vias[index];
        let a = via.rim_noise_amplitude;
        if a == 0.0 {
            return (via.radius_top, 0.0);
        }
        let noise = &self.rims[index];
        let r = via.radius_top + a * noise.value(phi);
        if r <= via.radius_bottom {
            (via.radius_bottom, 0.0)
        } else {
            (r, a * noise.derivative(phi))
        }
    }

    /// Which via, if any, contains `(x, y)` within its rim.
    fn via_at(&self, x: f64, y: f64) -> Option<usize> {
        self.scene
            .vias
            .iter()
            .position(|v| (x - v.center[0]).hypot(y - v.center[1]) <= v.outer_radius())
    }

    pub fn sample(&self, x: f64, y: f64) -> SurfaceSample {
        match self.via_at(x, y) {
            Some(i) => self.sample_via(i, x, y),
            None => SurfaceSample::FLAT,
        }
    }

    fn sample_via(&self, index: usize, x: f64, y: f64) -> SurfaceSample {
        let via = &self.scene.vias[index];
        let (dx, dy) = (x - via.center[0], y - via.center[1]);
        let r = dx.hypot(dy);
        let floor = SurfaceSample {
            z: -via.depth,
            slope: Some((0.0, 0.0)),
            wall_dir: None,
        };
        if r <= via.radius_bottom && r < via.radius_top {
            return floor;
        }
        let phi = dy.atan2(dx);
        let (rim, rim_dphi) = self.rim(index, phi);
        let span = rim - via.radius_bottom;
        if span <= 0.0 {
            // cylinder: the wall is the vertical set r == radius
            return if r < rim {
                floor
            } else if r == rim {
                SurfaceSample {
                    z: -0.5 * via.depth,
                    slope: None,
                    wall_dir: Some((dx / r, dy / r)),
                }
            } else {
                SurfaceSample::FLAT
            };
        }
        if r >= rim {
            return SurfaceSample::FLAT;
        }
        let t = (r - via.radius_bottom) / span;
        let (z, dz_dt) = match via.wall_profile {
            WallProfile::StraightTaper => (-via.depth * (1.0 - t), via.depth),
            WallProfile::CosineRoundedRim => (
                -0.5 * via.depth * (1.0 + (PI * t).cos()),
                0.5 * via.depth * PI * (PI * t).sin(),
            ),
        };
        let dt_dr = 1.0 / span;
        let dt_dphi = -(r - via.radius_bottom) * rim_dphi / (span * span);
        let (dr_dx, dr_dy) = (dx / r, dy / r);
        let (dphi_dx, dphi_dy) = (-dy / (r * r), dx / (r * r));
        SurfaceSample {
            z,
            slope: Some((
                dz_dt * (dt_dr * dr_dx + dt_dphi * dphi_dx),
                dz_dt * (dt_dr * dr_dy + dt_dphi * dphi_dy),
            )),
            wall_dir: None,
        }
    }

    fn pixel(&self, i: usize, j: usize) -> SurfaceSample {
        let p = self.scene.pixel_pitch;
        self.sample(i as f64 * p, j as f64 * p)
    }

    /// True when the straight line from `(x, y, z)` toward `light` passes
    /// below the surface before leaving the via.
    fn in_horizon_shadow(&self, index: usize, x: f64, y: f64, z: f64, light: [f64; 3]) -> bool {
        let horizontal = light[0].hypot(light[1]);
        if horizontal < 1e-12 || z >= 0.0 {
            return false;
        }
        let via = &self.scene.vias[index];
        let (ux, uy) = (light[0] / horizontal, light[1] / horizontal);
        let rise = light[2] / horizontal;
        let step = 0.25 * self.scene.pixel_pitch;
        let reach = 2.0 * via.outer_radius() + step;
        let mut s = step;
        while s <= reach {
            let ray = z + s * rise;
            if ray >= 0.0 {
                return false;
            }
            let (px, py) = (x + s * ux, y + s * uy);
            if self.sample_via(index, px, py).z > ray + 1e-9 {
                return true;
            }
            s += step;
        }
        false
    }
}

/// Ground-truth depth, micrometers.
pub fn analytic_depth(scene: &SceneSpec) -> Result<DepthMap> {
    let surface = Surface::new(scene)?;
    let z = Raster::from_fn(scene.width, scene.height, |i, j| surface.pixel(i, j).z);
    DepthMap::new(z, scene.pixel_pitch)
}

/// Ground-truth normals; vertical and near-vertical walls are masked.
pub fn analytic_normals(scene: &SceneSpec) -> Result<NormalField> {
    let surface = Surface::new(scene)?;
    let max_slope = MAX_RECOVERABLE_WALL_DEG.to_radians().tan();
    let (w, h) = (scene.width, scene.height);
    let mut normals = Raster::filled(w, h, SENTINEL_NORMAL);
    let mut albedo = Raster::zeros(w, h);
    let mut mask = Raster::filled(w, h, false);
    for j in 0..h {
        for i in 0..w {
            let s = surface.pixel(i, j);
            if let Some((p, q)) = s.slope {
                if p.hypot(q) <= max_slope {
                    *normals.get_mut(i, j) = s.normal();
                    *albedo.get_mut(i, j) = scene.albedo;
                    *mask.get_mut(i, j) = true;
                }
            }
        }
    }
    Ok(NormalField {
        normals,
        albedo,
        mask,
    })
}

/// Noiseless Lambertian shading plus the configured shadows, no noise.
fn shade(surface: &Surface<'_>, lights: &LightSet) -> Vec<Raster<f64>> {
    let scene = surface.scene;
    let (w, h) = (scene.width, scene.height);
    let dirs = lights.to_arrays();
    let shaded: Vec<Vec<f64>> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % w, idx / w);
            let (x, y) = (i as f64 * scene.pixel_pitch, j as f64 * scene.pixel_pitch);
            let s = surface.sample(x, y);
            let n = s.normal();
            let via = match scene.shadow_model {
                ShadowModel::Horizon => surface.via_at(x, y),
                ShadowModel::None => None,
            };
            dirs.iter()
                .map(|l| {
                    let cos = n[0] * l[0] + n[1] * l[1] + n[2] * l[2];
                    let lit = match via {
                        Some(k) => !surface.in_horizon_shadow(k, x, y, s.z, *l),
                        None => true,
                    };
                    if lit {
                        scene.albedo * cos.max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    (0..dirs.len())
        .map(|k| Raster::from_fn(w, h, |i, j| shaded[j * w + i][k]))
        .collect()
}

/// Renders one frame per light. Noise is zero-mean Gaussian with the
/// scene's `noise_sigma`, clamped to `[0, 1]`; output is a pure function of
/// `(scene, lights, seed)`.
pub fn render_scene(scene: &SceneSpec, lights: &LightSet, seed: u64) -> Result<ImageStack> {
    let surface = Surface::new(scene)?;
    let mut frames = shade(&surface, lights);
    if scene.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, scene.noise_sigma)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for (k, frame) in frames.iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            for v in frame.as_mut_slice() {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
    }
    ImageStack::new(frames, scene.pixel_pitch)
}

/// `count` lights evenly spread in azimuth at a fixed elevation (degrees).
pub fn ring_lights(count: usize, elevation_deg: f64) -> Result<LightSet> {
    let el = elevation_deg.to_radians();
    let dirs: Vec<[f64; 3]> = (0..count)
        .map(|k| {
            let az = TAU * k as f64 / count as f64;
            [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
        })
        .collect();
    LightSet::from_unit_vectors(&dirs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photometric::{angular_error, normalize_lights};
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_scene_is_flat() {
        let scene = SceneSpec::flat(8, 6, 0.5);
        let d = analytic_depth(&scene).unwrap();
        assert!(d.z.as_slice().iter().all(|z| *z == 0.0));
        let n = analytic_normals(&scene).unwrap();
        assert!(n.normals.as_slice().iter().all(|n| *n == [0.0, 0.0, 1.0]));
        assert!(n.mask.as_slice().iter().all(|m| *m));
    }

    #[test]
    fn cylinder_wall_is_vertical_and_masked() {
        // center on pixel (20, 20), radius exactly 10 px
        let via = ViaSpec::tapered([10.0, 10.0], 5.0, 5.0, 20.0);
        let scene = SceneSpec {
            vias: vec![via],
            ..SceneSpec::flat(41, 41, 0.5)
        };
        let surface = Surface::new(&scene).unwrap();
        let wall = surface.sample(15.0, 10.0);
        assert_eq!(wall.slope, None);
        let n = wall.normal();
        assert_eq!(n[2], 0.0);
        assert_abs_diff_eq!(n[0], -1.0, epsilon = 1e-15);
        let truth = analytic_normals(&scene).unwrap();
        assert!(!*truth.mask.get(30, 20));
        assert!(*truth.mask.get(31, 20));
        assert!(*truth.mask.get(29, 20));
    }

    #[test]
    fn taper_slope_is_rise_over_run() {
        let via = ViaSpec::tapered([0.0, 0.0], 30.0, 25.0, 50.0);
        let scene = SceneSpec {
            vias: vec![via],
            ..SceneSpec::flat(4, 4, 1.0)
        };
        let surface = Surface::new(&scene).unwrap();
        for r in [25.5, 27.0, 29.9] {
            let (p, q) = surface.sample(r, 0.0).slope.unwrap();
            assert_abs_diff_eq!(p, 10.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(surface.sample(27.5, 0.0).z, -25.0, epsilon = 1e-12);
    }

    #[test]
    fn slopes_match_finite_differences() {
        for profile in [WallProfile::StraightTaper, WallProfile::CosineRoundedRim] {
            let via = ViaSpec {
                wall_profile: profile,
                rim_noise_amplitude: 0.8,
                ..ViaSpec::tapered([0.0, 0.0], 20.0, 12.0, 10.0)
            };
            let scene = SceneSpec {
                vias: vec![via],
                ..SceneSpec::flat(4, 4, 1.0)
            };
            let surface = Surface::new(&scene).unwrap();
            let h = 1e-6;
            for k in 0..40 {
                let phi = 0.37 + TAU * k as f64 / 40.0;
                let r = 13.0 + 6.0 * (k as f64 / 40.0);
                let (x, y) = (r * phi.cos(), r * phi.sin());
                let s = surface.sample(x, y);
                if s.z == 0.0 || s.z == -10.0 {
                    continue;
                }
                let fx = (surface.sample(x + h, y).z - surface.sample(x - h, y).z) / (2.0 * h);
                let fy = (surface.sample(x, y + h).z - surface.sample(x, y - h).z) / (2.0 * h);
                let (p, q) = s.slope.unwrap();
                assert_abs_diff_eq!(p, fx, epsilon = 1e-5);
                assert_abs_diff_eq!(q, fy, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn flat_scene_renders_albedo_times_cosine() {
        let scene = SceneSpec {
            albedo: 0.7,
            ..SceneSpec::flat(5, 4, 1.0)
        };
        let lights =
            normalize_lights(&[[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.0, -0.6, 0.8]]).unwrap();
        let stack = render_scene(&scene, &lights, 1).unwrap();
        assert!(stack.frames()[0].as_slice().iter().all(|v| *v == 0.7));
        for v in stack.frames()[1].as_slice() {
            assert_abs_diff_eq!(*v, 0.8 * 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn noisy_render_is_deterministic() {
        let via = ViaSpec::tapered([0.0, 0.0], 6.0, 4.0, 5.0);
        let mut scene = SceneSpec::single(24, 24, 0.5, via);
        scene.noise_sigma = 0.02;
        let lights = ring_lights(5, 50.0).unwrap();
        let a = render_scene(&scene, &lights, 42).unwrap();
        let b = render_scene(&scene, &lights, 42).unwrap();
        let c = render_scene(&scene, &lights, 43).unwrap();
        for k in 0..5 {
            assert_eq!(a.frames()[k], b.frames()[k]);
        }
        assert_ne!(a.frames()[0], c.frames()[0]);
    }

    #[test]
    fn horizon_shadows_only_darken() {
        let via = ViaSpec::tapered([0.0, 0.0], 8.0, 5.0, 6.0);
        let mut scene = SceneSpec::single(40, 40, 0.5, via);
        let lights = ring_lights(6, 35.0).unwrap();
        let plain = render_scene(&scene, &lights, 0).unwrap();
        scene.shadow_model = ShadowModel::Horizon;
        let shadowed = render_scene(&scene, &lights, 0).unwrap();
        let mut darker = 0;
        for (a, b) in plain.frames().iter().zip(shadowed.frames()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!(y <= x);
                if y < x {
                    darker += 1;
                }
            }
        }
        assert!(darker > 0);
    }

    #[test]
    fn overlapping_vias_rejected() {
        let a = ViaSpec::tapered([0.0, 0.0], 5.0, 4.0, 3.0);
        let b = ViaSpec::tapered([8.0, 0.0], 5.0, 4.0, 3.0);
        let scene = SceneSpec {
            vias: vec![a, b],
            ..SceneSpec::flat(10, 10, 1.0)
        };
        assert!(matches!(
            analytic_depth(&scene),
            Err(Error::OverlappingVias(0, 1))
        ));
    }

    #[test]
    fn rim_noise_is_band_limited_and_normalized() {
        let n = RimNoise::for_via(3);
        let peak = (0..10_000)
            .map(|i| n.value(TAU * i as f64 / 10_000.0).abs())
            .fold(0.0, f64::max);
        assert!(peak <= 1.0 + 1e-3 && peak > 0.99);
        assert_abs_diff_eq!(n.value(0.3), n.value(0.3 + TAU), epsilon = 1e-12);
    }

    #[test]
    fn render_then_solve_recovers_flat_normals() {
        let scene = SceneSpec::flat(6, 6, 1.0);
        let lights = ring_lights(4, 45.0).unwrap();
        let stack = render_scene(&scene, &lights, 0).unwrap();
        let field = crate::photometric::estimate_normals(&stack, &lights, 0.01).unwrap();
        for n in field.normals.as_slice() {
            assert!(angular_error(*n, [0.0, 0.0, 1.0]) < 1e-12);
        }
    }
}
