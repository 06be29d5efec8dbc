//! Roundness profile of a via whose rim is perturbed, slice by slice.
//!
//! cargo run --example roundness_vs_depth

use viascope::prelude::*;

fn main() -> Result<()> {
    let mut via = ViaSpec::tapered([0.0, 0.0], 25.0, 15.0, 40.0);
    via.rim_noise_amplitude = 1.5;
    let scene = SceneSpec::single(160, 160, 0.5, via);
    let depth = analytic_depth(&scene)?;

    let m = measure_via(&depth, 9)?;
    println!("depth {:.3} um, diameter {:.3} um", m.depth, m.diameter);
    println!(
        "{:>10} {:>10} {:>12} {:>8}",
        "level_um", "radius_um", "roundness_um", "points"
    );
    for p in &m.profiles {
        println!(
            "{:>10.3} {:>10.3} {:>12.4} {:>8}",
            p.level, p.circle.r, p.roundness, p.point_count
        );
    }
    Ok(())
}
