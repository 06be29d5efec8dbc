//! Dark-field light placement limits.
//!
//! A light mounted at lateral offset `r` and height `h` reaches the sample
//! at `alpha = atan(r / h)` from the optical axis. It lands in the
//! dark-field zone when `alpha` exceeds twice the objective's aperture
//! angle, and it still enters the substrate when `alpha` stays below the
//! critical angle. Both limits together bound the mount height:
//!
//! ```text
//! r / tan(critical) < h < r / tan(2 * aperture)
//! ```
//!
//! The interval is empty when `2 * aperture >= critical`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub numerical_aperture: f64,
    #[serde(default = "air")]
    pub immersion_index: f64,
}

fn air() -> f64 {
    1.0
}

impl ObjectiveSpec {
    pub fn in_air(numerical_aperture: f64) -> Self {
        Self {
            numerical_aperture,
            immersion_index: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstrateSpec {
    pub name: String,
    pub refractive_index: f64,
    /// Index of the medium on the far side of the governing interface.
    #[serde(default = "air")]
    pub exit_index: f64,
}

impl SubstrateSpec {
    pub fn new(name: impl Into<String>, refractive_index: f64) -> Self {
        Self {
            name: name.into(),
            refractive_index,
            exit_index: 1.0,
        }
    }

    pub fn glass() -> Self {
        Self::new("glass", 1.5)
    }

    /// Near-infrared index; silicon is opaque in the visible.
    pub fn silicon() -> Self {
        Self::new("silicon", 3.48)
    }
}

/// Objective half acceptance angle, `asin(NA / n_immersion)`.
pub fn aperture_angle(obj: &ObjectiveSpec) -> Result<f64> {
    let ObjectiveSpec {
        numerical_aperture: na,
        immersion_index: n,
    } = *obj;
    if !(na > 0.0 && na < n) {
        return Err(Error::InvalidNA { na, immersion: n });
    }
    Ok((na / n).asin())
}

/// Critical angle `asin(n_exit / n_substrate)`; the default exit medium is air.
pub fn critical_angle(sub: &SubstrateSpec) -> Result<f64> {
    let n = sub.refractive_index;
    if !(n.is_finite() && sub.exit_index > 0.0 && n > sub.exit_index) {
        return Err(Error::InvalidIndex(n));
    }
    Ok((sub.exit_index / n).asin())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeightRange {
    /// Admissible mount heights, millimeters, `min < max`.
    Range {
        min: f64,
        max: f64,
    },
    Empty,
}

impl HeightRange {
    pub fn is_empty(&self) -> bool {
        matches!(self, HeightRange::Empty)
    }
}

/// Incidence angle from the optical axis for a light at `(offset, height)`.
pub fn incidence_angle(offset: f64, height: f64) -> f64 {
    offset.atan2(height)
}

pub fn light_height_range(
    obj: &ObjectiveSpec,
    sub: &SubstrateSpec,
    offset_mm: f64,
) -> Result<HeightRange> {
    if !(offset_mm > 0.0 && offset_mm.is_finite()) {
        return Err(Error::NonpositiveOffset(offset_mm));
    }
    let dark_field = 2.0 * aperture_angle(obj)?;
    let critical = critical_angle(sub)?;
    if dark_field >= critical || dark_field >= FRAC_PI_2 {
        return Ok(HeightRange::Empty);
    }
    Ok(HeightRange::Range {
        min: offset_mm / critical.tan(),
        max: offset_mm / dark_field.tan(),
    })
}
