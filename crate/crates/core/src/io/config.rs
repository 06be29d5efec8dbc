//! JSON light, scene and job configuration files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leveling::LevelingParams;
use crate::metrology::Reference;
use crate::photometric::{normalize_lights, LightSet, DEFAULT_SHADOW_THRESHOLD};
use crate::synthetic::SceneSpec;

/// Light layout, either measured positions or ready-made directions.
///
/// ```json
/// { "kind": "positions_mm", "lights": [[30, 0, 40], [-30, 0, 40], [0, 30, 40]] }
/// { "kind": "unit_vectors", "lights": [[0.6, 0, 0.8], [-0.6, 0, 0.8], [0, 0.6, 0.8]] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LightsConfig {
    /// Millimeters relative to the sample center; normalized on load.
    PositionsMm {
        lights: Vec<[f64; 3]>,
    },
    UnitVectors {
        lights: Vec<[f64; 3]>,
    },
}

impl LightsConfig {
    pub fn to_light_set(&self) -> Result<LightSet> {
        match self {
            LightsConfig::PositionsMm { lights } => normalize_lights(lights),
            LightsConfig::UnitVectors { lights } => LightSet::from_unit_vectors(lights),
        }
    }

    pub fn from_light_set(lights: &LightSet) -> Self {
        LightsConfig::UnitVectors {
            lights: lights.to_arrays(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("config types always serialize");
    out.push(b'\n');
    out
}

pub fn load_lights(path: &Path) -> Result<LightSet> {
    read_json::<LightsConfig>(path)?.to_light_set()
}

pub fn load_scene(path: &Path) -> Result<SceneSpec> {
    let scene: SceneSpec = read_json(path)?;
    scene.validate()?;
    Ok(scene)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelingConfig {
    pub spatial_sigma: f64,
    /// Defaults to 10% of the reconstructed map's peak-to-valley.
    #[serde(default)]
    pub depth_sigma: Option<f64>,
    #[serde(default)]
    pub window_radius: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub depth_um: f64,
    pub diameter_um: f64,
}

impl From<ReferenceConfig> for Reference {
    fn from(r: ReferenceConfig) -> Self {
        Reference {
            depth: r.depth_um,
            diameter: r.diameter_um,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutputs {
    pub depth: PathBuf,
    #[serde(default)]
    pub leveled: Option<PathBuf>,
    pub metrics: PathBuf,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

/// A complete reconstruct, level, inspect and compare run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub lights: LightsConfig,
    pub images: Vec<PathBuf>,
    pub pixel_pitch_um: f64,
    #[serde(default = "default_threshold")]
    pub shadow_threshold: f64,
    #[serde(default)]
    pub leveling: Option<LevelingConfig>,
    #[serde(default = "default_slices")]
    pub slice_count: usize,
    /// Columns and rows the map is split into, one via per tile.
    #[serde(default = "single_tile")]
    pub tiles: [usize; 2],
    #[serde(default)]
    pub references: Vec<ReferenceConfig>,
    pub outputs: JobOutputs,
}

fn default_threshold() -> f64 {
    DEFAULT_SHADOW_THRESHOLD
}

fn default_slices() -> usize {
    9
}

fn single_tile() -> [usize; 2] {
    [1, 1]
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let job: JobConfig = read_json(path)?;
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<()> {
        self.lights.to_light_set()?;
        if self.images.len() < 3 {
            return Err(Error::TooFewImages {
                got: self.images.len(),
            });
        }
        if !(self.pixel_pitch_um > 0.0 && self.pixel_pitch_um.is_finite()) {
            return Err(Error::InvalidParameter(
                "pixel_pitch_um must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.shadow_threshold) {
            return Err(Error::InvalidParameter(
                "shadow_threshold must lie in [0, 1)".into(),
            ));
        }
        if let Some(l) = &self.leveling {
            LevelingParams::new(
                l.spatial_sigma,
                l.depth_sigma.unwrap_or(1.0),
                l.window_radius.unwrap_or(1),
            )?;
        }
        if self.slice_count < 1 {
            return Err(Error::InvalidParameter(
                "slice_count must be at least 1".into(),
            ));
        }
        if self.tiles[0] < 1 || self.tiles[1] < 1 {
            return Err(Error::InvalidParameter("tiles must be at least 1x1".into()));
        }
        let vias = self.tiles[0] * self.tiles[1];
        if !self.references.is_empty() && self.references.len() != vias {
            return Err(Error::LengthMismatch {
                measured: vias,
                reference: self.references.len(),
            });
        }
        let mut seen = HashSet::new();
        let outputs = [
            Some(&self.outputs.depth),
            self.outputs.leveled.as_ref(),
            Some(&self.outputs.metrics),
            self.outputs.report.as_ref(),
        ];
        for path in self.images.iter().chain(outputs.into_iter().flatten()) {
            if !seen.insert(path) {
                return Err(Error::InvalidParameter(format!(
                    "path {} is used more than once",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_normalized() {
        let cfg: LightsConfig = serde_json::from_str(
            r#"{"kind":"positions_mm","lights":[[30,0,40],[0,0,50],[0,-3,4]]}"#,
        )
        .unwrap();
        let set = cfg.to_light_set().unwrap();
        assert_eq!(set.to_arrays()[1], [0.0, 0.0, 1.0]);
        let again: LightsConfig =
            serde_json::from_slice(&to_json_bytes(&LightsConfig::from_light_set(&set))).unwrap();
        let set2 = again.to_light_set().unwrap();
        for (a, b) in set.to_arrays().iter().zip(set2.to_arrays()) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn unit_vectors_must_be_unit() {
        let cfg: LightsConfig =
            serde_json::from_str(r#"{"kind":"unit_vectors","lights":[[0.6,0,0.9]]}"#).unwrap();
        assert!(cfg.to_light_set().is_err());
    }

    fn job() -> JobConfig {
        serde_json::from_str(
            r#"{
                "lights": {"kind":"unit_vectors","lights":[[0.6,0,0.8],[-0.6,0,0.8],[0,0.6,0.8]]},
                "images": ["a.pgm","b.pgm","c.pgm"],
                "pixel_pitch_um": 0.5,
                "outputs": {"depth":"d.fdm1","metrics":"m.csv"}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn job_defaults_and_validation() {
        let j = job();
        j.validate().unwrap();
        assert_eq!(j.slice_count, 9);
        assert_eq!(j.shadow_threshold, DEFAULT_SHADOW_THRESHOLD);

        let mut dup = job();
        dup.outputs.metrics = PathBuf::from("a.pgm");
        assert!(dup.validate().is_err());

        let mut refs = job();
        refs.references = vec![
            ReferenceConfig {
                depth_um: 1.0,
                diameter_um: 1.0
            };
            2
        ];
        assert!(matches!(refs.validate(), Err(Error::LengthMismatch { .. })));
    }
}
