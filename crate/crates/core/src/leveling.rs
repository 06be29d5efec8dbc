//! Mean-anchored Gaussian leveling.
//!
//! A bilateral-style filter whose range kernel is centered on the average
//! depth of the map rather than on the pixel being filtered. Samples close
//! to the average dominate each window; outliers around rims and floors are
//! pulled toward their neighbors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integration::DepthMap;
use crate::raster::Raster;

const MIN_WEIGHT_SUM: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelingParams {
    /// Spatial Gaussian sigma, pixels.
    pub spatial_sigma: f64,
    /// Range Gaussian sigma, micrometers.
    pub depth_sigma: f64,
    /// Half-width of the square window, pixels.
    pub window_radius: usize,
}

impl LevelingParams {
    pub fn new(spatial_sigma: f64, depth_sigma: f64, window_radius: usize) -> Result<Self> {
        let p = Self {
            spatial_sigma,
            depth_sigma,
            window_radius,
        };
        p.validate()?;
        Ok(p)
    }

    /// Window radius of `ceil(3 * spatial_sigma)`.
    pub fn with_sigmas(spatial_sigma: f64, depth_sigma: f64) -> Result<Self> {
        let radius = (3.0 * spatial_sigma).ceil().max(1.0) as usize;
        Self::new(spatial_sigma, depth_sigma, radius)
    }

    /// Scale-relative defaults: 2 px spatial sigma and 10% of the map's
    /// peak-to-valley as depth sigma.
    pub fn defaults_for(map: &DepthMap) -> Self {
        let pv = map.peak_to_valley();
        let depth_sigma = if pv > 0.0 { 0.1 * pv } else { 1.0 };
        Self {
            spatial_sigma: 2.0,
            depth_sigma,
            window_radius: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_sigma.is_finite() && self.spatial_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spatial_sigma must be positive, got {}",
                self.spatial_sigma
            )));
        }
        if !(self.depth_sigma.is_finite() && self.depth_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "depth_sigma must be positive, got {}",
                self.depth_sigma
            )));
        }
        if self.window_radius < 1 {
            return Err(Error::InvalidParameter(
                "window_radius must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which pixels define the average depth the range kernel is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanRegion {
    /// Every pixel, via interiors included.
    #[default]
    All,
    /// Pixels at or above the median depth.
    Surface,
}

/// Range weight of a sample at depth `z` for average depth `mean`.
#[inline]
pub fn range_weight(z: f64, mean: f64, depth_sigma: f64) -> f64 {
    let d = z - mean;
    (-d * d / (2.0 * depth_sigma * depth_sigma)).exp()
}

pub fn anchor_depth(z: &Raster<f64>, region: MeanRegion) -> f64 {
    match region {
        MeanRegion::All => z.mean(),
        MeanRegion::Surface => {
            let mut sorted = z.as_slice().to_vec();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[(sorted.len() - 1) / 2];
            let upper = &sorted[(sorted.len() - 1) / 2..];
            debug_assert!(upper.iter().all(|v| *v >= median));
            upper.iter().sum::<f64>() / upper.len() as f64
        }
    }
}

/// The filter itself, without the final zero offset.
pub fn weighted_smooth(z: &Raster<f64>, params: &LevelingParams, mean: f64) -> Result<Raster<f64>> {
    params.validate()?;
    let (w, h) = (z.width(), z.height());
    let r = params.window_radius as isize;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| {
            (-r..=r).map(move |dx| {
                let d2 = (dx * dx + dy * dy) as f64;
                (-d2 / (2.0 * params.spatial_sigma * params.spatial_sigma)).exp()
            })
        })
        .collect();
    let range: Vec<f64> = z
        .as_slice()
        .iter()
        .map(|v| range_weight(*v, mean, params.depth_sigma))
        .collect();
    let side = (2 * r + 1) as usize;

    let rows: Vec<Result<Vec<f64>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let (mut num, mut den) = (0.0, 0.0);
                for dy in -r..=r {
                    let yy = y as isize + dy;
                    if yy < 0 || yy >= h as isize {
                        continue;
                    }
                    for dx in -r..=r {
                        let xx = x as isize + dx;
                        if xx < 0 || xx >= w as isize {
                            continue;
                        }
                        let idx = yy as usize * w + xx as usize;
                        let wgt =
                            spatial[(dy + r) as usize * side + (dx + r) as usize] * range[idx];
                        num += wgt * z.as_slice()[idx];
                        den += wgt;
                    }
                }
                if !(den >= MIN_WEIGHT_SUM) {
                    return Err(Error::DegenerateWeights { x, y });
                }
                row.push(num / den);
            }
            Ok(row)
        })
        .collect();

    let mut data = Vec::with_capacity(w * h);
    for row in rows {
        data.extend(row?);
    }
    Raster::from_vec(w, h, data)
}

/// Levels `map` with the range kernel anchored at the global mean depth.
pub fn level_depth(map: &DepthMap, params: &LevelingParams) -> Result<DepthMap> {
    level_depth_in(map, params, MeanRegion::All)
}

/// Levels `map`; the output is re-offset so its minimum is zero.
pub fn level_depth_in(
    map: &DepthMap,
    params: &LevelingParams,
    region: MeanRegion,
) -> Result<DepthMap> {
    let mean = anchor_depth(&map.z, region);
    let mut out = weighted_smooth(&map.z, params, mean)?;
    let min = out.min();
    for v in out.as_mut_slice() {
        *v -= min;
    }
    DepthMap::new(out, map.pixel_pitch)
}
