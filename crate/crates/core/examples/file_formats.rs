//! Write and read back the on-disk formats: 16-bit PGM frames, FDM1 depth
//! maps, light configs and metrics CSV.
//!
//! cargo run --example file_formats

use viascope::io::csv::{measurements_csv, summary_csv};
use viascope::io::fdm::{load_depth_map, save_depth_map};
use viascope::io::pgm::{encode_pgm16, load_image_stack};
use viascope::io::LightsConfig;
use viascope::prelude::*;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("viascope-file-formats");
    std::fs::create_dir_all(&dir).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        std::fs::write(&path, bytes).expect("temp dir is writable");
        path
    };

    let scene = SceneSpec::single(96, 96, 0.5, ViaSpec::tapered([0.0, 0.0], 15.0, 11.0, 20.0));
    let mut dirs = ring_lights(4, 45.0)?.to_arrays();
    dirs.insert(0, [0.0, 0.0, 1.0]);
    let lights = LightSet::from_unit_vectors(&dirs)?;
    let stack = render_scene(&scene, &lights, 0)?;

    let frames: Vec<_> = stack
        .frames()
        .iter()
        .enumerate()
        .map(|(k, f)| write(&format!("frame_{k:02}.pgm"), &encode_pgm16(f)))
        .collect();
    let json =
        serde_json::to_vec_pretty(&LightsConfig::from_light_set(&lights)).expect("serializable");
    write("lights.json", &json);

    // frames are quantized to 16 bits on the way out
    let reread = load_image_stack(&frames, 0.5)?;
    let worst = stack
        .frames()
        .iter()
        .zip(reread.frames())
        .map(|(a, b)| a.max_abs_diff(b))
        .fold(0.0, f64::max);
    println!(
        "{} PGM frames, worst quantization error {worst:.2e}",
        frames.len()
    );

    let depth = reconstruct(&reread, &lights, DEFAULT_SHADOW_THRESHOLD)?;
    let fdm = dir.join("depth.fdm1");
    save_depth_map(&fdm, &depth)?;
    let back = load_depth_map(&fdm)?;
    println!(
        "FDM1 {}x{}, pitch {} um, max f32 rounding {:.2e} um",
        back.width(),
        back.height(),
        back.pixel_pitch,
        back.z.max_abs_diff(&depth.z)
    );

    let m = measure_via(&back, 3)?;
    print!("{}", measurements_csv(std::slice::from_ref(&m)));
    print!("{}", summary_csv(&[m]));
    println!("files in {}", dir.display());
    Ok(())
}
