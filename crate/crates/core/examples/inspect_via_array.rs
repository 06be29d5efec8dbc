//! Reconstruct a 2x2 via array from rendered frames and compare each via
//! with its design values.
//!
//! cargo run --example inspect_via_array

use viascope::prelude::*;

fn main() -> Result<()> {
    let via = ViaSpec::tapered([0.0, 0.0], 20.0, 14.0, 30.0);
    let mut scene = SceneSpec::array_2x2(256, 256, 0.5, &via);
    scene.albedo = 0.8;
    scene.noise_sigma = 0.005;

    let mut dirs = ring_lights(6, 45.0)?.to_arrays();
    dirs.insert(0, [0.0, 0.0, 1.0]);
    let lights = LightSet::from_unit_vectors(&dirs)?;

    let stack = render_scene(&scene, &lights, 3)?;
    let depth = reconstruct(&stack, &lights, 0.02)?;
    let leveled = level_depth(&depth, &LevelingParams::with_sigmas(1.0, 10.0)?)?;

    let measured = leveled
        .tiles(2, 2)
        .iter()
        .map(|t| measure_via(t, 9))
        .collect::<Result<Vec<_>>>()?;
    // straight taper: the diameter is read 10% of the depth down the wall
    let design = Reference {
        depth: via.depth,
        diameter: 2.0 * (via.radius_top - 0.1 * (via.radius_top - via.radius_bottom)),
    };
    let report = compare_measurements(&measured, &[design; 4])?;
    for (i, row) in report.rows.iter().enumerate() {
        println!(
            "via {i}: depth {:.3} um ({:+.2}%), diameter {:.3} um ({:+.2}%)",
            row.meas_depth, row.depth_err_pct, row.meas_diameter, row.diameter_err_pct
        );
    }
    println!(
        "MAPE: depth {:.3}%, diameter {:.3}%",
        report.depth_mape, report.diameter_mape
    );
    Ok(())
}
