//! Images to a detrended depth map in one call.

use crate::error::Result;
use crate::integration::{integrate, DepthMap};
use crate::photometric::{
    estimate_normals, normals_to_gradients, ImageStack, LightSet, NormalField,
};

/// Normals, gradients and the integrated depth of one acquisition.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub normals: NormalField,
    pub depth: DepthMap,
}

pub fn reconstruct_full(
    stack: &ImageStack,
    lights: &LightSet,
    shadow_threshold: f64,
) -> Result<Reconstruction> {
    let normals = estimate_normals(stack, lights, shadow_threshold)?;
    let grad = normals_to_gradients(&normals);
    let depth = integrate(&grad, stack.pixel_pitch())?;
    Ok(Reconstruction { normals, depth })
}

pub fn reconstruct(
    stack: &ImageStack,
    lights: &LightSet,
    shadow_threshold: f64,
) -> Result<DepthMap> {
    Ok(reconstruct_full(stack, lights, shadow_threshold)?.depth)
}
