//! Render a tapered via under five lights and recover its surface normals.
//!
//! cargo run --example render_and_recover_normals

use viascope::prelude::*;

fn main() -> Result<()> {
    let via = ViaSpec::tapered([0.0, 0.0], 20.0, 14.0, 30.0);
    let mut scene = SceneSpec::single(128, 128, 0.5, via);
    scene.albedo = 0.8;

    // overhead light plus a ring of four at 45 degrees
    let mut dirs = ring_lights(4, 45.0)?.to_arrays();
    dirs.insert(0, [0.0, 0.0, 1.0]);
    let lights = LightSet::from_unit_vectors(&dirs)?;

    let stack = render_scene(&scene, &lights, 0)?;
    let field = estimate_normals(&stack, &lights, DEFAULT_SHADOW_THRESHOLD)?;
    let truth = analytic_normals(&scene)?;

    let mut worst: f64 = 0.0;
    let mut sum = 0.0;
    for y in 0..field.height() {
        for x in 0..field.width() {
            if *field.mask.get(x, y) {
                let e = angular_error(*field.normals.get(x, y), *truth.normals.get(x, y));
                worst = worst.max(e);
                sum += e;
            }
        }
    }
    let valid = field.valid_count();
    println!(
        "{} frames of {}x{}",
        stack.count(),
        stack.width(),
        stack.height()
    );
    println!(
        "valid pixels: {valid} of {}",
        field.width() * field.height()
    );
    println!("mean angular error: {:.3e} rad", sum / valid as f64);
    println!("worst angular error: {worst:.3e} rad");
    println!("albedo at the center: {:.4}", field.albedo.get(64, 64));
    Ok(())
}
