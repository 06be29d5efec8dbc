//! Level a noisy depth map and show how much the flat surface settles.
//!
//! cargo run --example leveling

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use viascope::prelude::*;

fn surface_spread(map: &DepthMap) -> f64 {
    // standard deviation over a flat 24x24 corner
    let vals: Vec<f64> = map.crop(0, 0, 24, 24).z.into_vec();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt()
}

fn main() -> Result<()> {
    let scene = SceneSpec::single(
        128,
        128,
        0.5,
        ViaSpec::tapered([0.0, 0.0], 20.0, 14.0, 30.0),
    );
    let truth = analytic_depth(&scene)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.3).expect("valid sigma");
    let noisy = DepthMap::new(
        truth.z.map(|v| v + noise.sample(&mut rng)),
        truth.pixel_pitch,
    )?;

    for (spatial, depth_sigma) in [(1.0, 10.0), (2.0, 10.0), (2.0, 1.0)] {
        let params = LevelingParams::with_sigmas(spatial, depth_sigma)?;
        let leveled = level_depth(&noisy, &params)?;
        let m = measure_via(&leveled, 5)?;
        println!(
            "spatial {spatial} px, depth {depth_sigma} um: surface spread {:.3} um, depth {:.2} um, diameter {:.2} um",
            surface_spread(&leveled),
            m.depth,
            m.diameter
        );
    }
    println!("unleveled surface spread {:.3} um", surface_spread(&noisy));
    Ok(())
}
