//! File formats: PGM images, FDM1 depth maps, CSV metrics and JSON configs.

pub mod config;
pub mod csv;
pub mod fdm;
pub mod pgm;

pub use config::{load_lights, load_scene, JobConfig, LightsConfig};
pub use fdm::{decode_fdm, encode_fdm, load_depth_map, save_depth_map};
pub use pgm::{decode_pgm, encode_pgm16, load_image_stack, read_pgm, Pgm};
