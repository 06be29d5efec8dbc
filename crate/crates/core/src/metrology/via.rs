use rayon::prelude::*;

use super::circle::{fit_lsc, roundness, Circle};
use super::contour::{slice_contour_at, surface_reference};
use crate::error::{Error, Result};
use crate::integration::DepthMap;

/// Fraction of the via depth at which the diameter is read.
pub const DIAMETER_LEVEL: f64 = 0.10;
/// Slices are spread over this fraction range of the via depth.
pub const SLICE_SPAN: (f64, f64) = (0.05, 0.95);
const FLOOR_PERCENTILE: f64 = 0.01;
/// Median absolute deviation to standard deviation for Gaussian noise.
const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceProfile {
    /// Depth below the surface reference, micrometers.
    pub level: f64,
    pub circle: Circle,
    pub roundness: f64,
    pub point_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViaMeasurement {
    pub depth: f64,
    pub diameter: f64,
    /// Sorted by ascending level.
    pub profiles: Vec<SliceProfile>,
}

impl ViaMeasurement {
    pub fn roundness_values(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.roundness).collect()
    }
}

/// Contour, LSC fit and roundness at one depth below `surface`.
pub fn slice_profile(map: &DepthMap, surface: f64, level: f64) -> Result<SliceProfile> {
    let points = slice_contour_at(map, surface, level)?;
    let circle = fit_lsc(&points)?;
    let roundness = roundness(&points, &circle)?;
    Ok(SliceProfile {
        level,
        circle,
        roundness,
        point_count: points.len(),
    })
}

/// Evenly spaced slice levels as fractions of depth: `n` cell midpoints of
/// the `[5%, 95%]` span.
pub fn slice_fractions(slice_count: usize) -> Vec<f64> {
    let (lo, hi) = SLICE_SPAN;
    (0..slice_count)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / slice_count as f64)
        .collect()
}

/// Robust standard deviation of the surface population around `surface`.
fn surface_noise(map: &DepthMap, surface: f64) -> f64 {
    let half = 0.5 * (surface - map.z.min());
    let mut dev: Vec<f64> = map
        .z
        .as_slice()
        .iter()
        .filter(|v| **v >= surface - half)
        .map(|v| (v - surface).abs())
        .collect();
    if dev.is_empty() {
        return 0.0;
    }
    dev.sort_by(f64::total_cmp);
    MAD_TO_SIGMA * dev[dev.len() / 2]
}

/// Depth, diameter and roundness-vs-depth of the via in `map`.
///
/// Depth is measured from the modal surface down to the 1st percentile of
/// the via region (pixels deeper than half the depth range). Diameter is
/// twice the LSC radius 10% of the depth below the surface.
pub fn measure_via(map: &DepthMap, slice_count: usize) -> Result<ViaMeasurement> {
    if slice_count < 1 {
        return Err(Error::InvalidParameter(
            "slice_count must be at least 1".into(),
        ));
    }
    let surface = surface_reference(&map.z);
    let range = surface - map.z.min();
    let noise = surface_noise(map, surface);
    let floor = (3.0 * noise).max(1e-9 * surface.abs().max(1.0));
    if !(range > floor) {
        return Err(Error::NoVia { range, floor });
    }

    let mut region: Vec<f64> = map
        .z
        .as_slice()
        .iter()
        .copied()
        .filter(|v| *v < surface - 0.5 * range)
        .collect();
    region.sort_by(f64::total_cmp);
    let rank = ((region.len() - 1) as f64 * FLOOR_PERCENTILE).round() as usize;
    let depth = surface - region[rank];

    let diameter = 2.0
        * slice_profile(map, surface, DIAMETER_LEVEL * depth)?
            .circle
            .r;
    let profiles = slice_fractions(slice_count)
        .into_par_iter()
        .map(|f| slice_profile(map, surface, f * depth))
        .collect::<Result<Vec<_>>>()?;

    Ok(ViaMeasurement {
        depth,
        diameter,
        profiles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub depth: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub ref_depth: f64,
    pub meas_depth: f64,
    pub depth_err: f64,
    pub depth_err_pct: f64,
    pub ref_diameter: f64,
    pub meas_diameter: f64,
    pub diameter_err: f64,
    pub diameter_err_pct: f64,
}

impl ComparisonRow {
    pub fn new(reference: Reference, depth: f64, diameter: f64) -> Self {
        let depth_err = depth - reference.depth;
        let diameter_err = diameter - reference.diameter;
        Self {
            ref_depth: reference.depth,
            meas_depth: depth,
            depth_err,
            depth_err_pct: 100.0 * depth_err / reference.depth,
            ref_diameter: reference.diameter,
            meas_diameter: diameter,
            diameter_err,
            diameter_err_pct: 100.0 * diameter_err / reference.diameter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    /// Mean absolute percentage error of depth.
    pub depth_mape: f64,
    /// Mean absolute percentage error of diameter.
    pub diameter_mape: f64,
}

pub fn compare_to_reference(
    measured: &[(f64, f64)],
    reference: &[Reference],
) -> Result<ComparisonReport> {
    if measured.len() != reference.len() {
        return Err(Error::LengthMismatch {
            measured: measured.len(),
            reference: reference.len(),
        });
    }
    if let Some(r) = reference
        .iter()
        .find(|r| !(r.depth > 0.0 && r.diameter > 0.0))
    {
        return Err(Error::InvalidParameter(format!(
            "reference values must be positive, got depth {} diameter {}",
            r.depth, r.diameter
        )));
    }
    let rows: Vec<ComparisonRow> = measured
        .iter()
        .zip(reference)
        .map(|((depth, diameter), r)| ComparisonRow::new(*r, *depth, *diameter))
        .collect();
    let n = rows.len().max(1) as f64;
    Ok(ComparisonReport {
        depth_mape: rows.iter().map(|r| r.depth_err_pct.abs()).sum::<f64>() / n,
        diameter_mape: rows.iter().map(|r| r.diameter_err_pct.abs()).sum::<f64>() / n,
        rows,
    })
}

/// [`compare_to_reference`] over full measurements.
pub fn compare_measurements(
    measured: &[ViaMeasurement],
    reference: &[Reference],
) -> Result<ComparisonReport> {
    let pairs: Vec<(f64, f64)> = measured.iter().map(|m| (m.depth, m.diameter)).collect();
    compare_to_reference(&pairs, reference)
}
