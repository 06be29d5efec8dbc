//! Depth metrology of wafer vias from calibrated photometric stereo.
//!
//! The pipeline runs images -> surface normals -> gradients -> depth map
//! (DCT Poisson solve, detrended so the map starts at zero) -> leveling ->
//! slice contours -> least-squares circles, roundness, depth and diameter.
//! [`synthetic`] renders parametric via scenes with closed-form ground
//! truth, and [`illumination`] bounds where dark-field lights can be mounted.
//!
//! ```
//! use viascope::prelude::*;
//!
//! let via = ViaSpec::tapered([0.0, 0.0], 8.0, 6.0, 10.0);
//! let scene = SceneSpec::single(64, 64, 0.5, via);
//! let lights = ring_lights(6, 50.0).unwrap();
//! let stack = render_scene(&scene, &lights, 0).unwrap();
//! let depth = reconstruct(&stack, &lights, DEFAULT_SHADOW_THRESHOLD).unwrap();
//! assert!(depth.z.min().abs() < 1e-9);
//! ```

// `!(x > y)` is used on purpose so NaN takes the failure branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dct;
pub mod error;
pub mod illumination;
pub mod integration;
pub mod io;
pub mod leveling;
pub mod metrology;
pub mod photometric;
pub mod pipeline;
pub mod raster;
pub mod synthetic;

pub use error::{Error, Result};
pub use raster::Raster;

/// The commonly used types and functions in one import.
pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::illumination::{light_height_range, HeightRange, ObjectiveSpec, SubstrateSpec};
    pub use crate::integration::{detrend, integrate, poisson_solve, DepthMap};
    pub use crate::leveling::{level_depth, level_depth_in, LevelingParams, MeanRegion};
    pub use crate::metrology::{
        compare_measurements, fit_lsc, measure_via, roundness, Circle, Reference, ViaMeasurement,
    };
    pub use crate::photometric::{
        angular_error, estimate_normals, normalize_lights, normals_to_gradients, GradientField,
        ImageStack, LightSet, NormalField, DEFAULT_SHADOW_THRESHOLD,
    };
    pub use crate::pipeline::reconstruct;
    pub use crate::raster::Raster;
    pub use crate::synthetic::{
        analytic_depth, analytic_normals, render_scene, ring_lights, SceneSpec, ViaSpec,
        WallProfile,
    };
}
