//! Integrate the gradients of a known surface and compare with the surface.
//!
//! cargo run --example poisson_integration

use viascope::prelude::*;

fn main() -> Result<()> {
    let (w, h) = (96, 80);
    let pitch = 0.5;
    // a Gaussian bump on a tilted plane, in micrometers
    let surf = |x: f64, y: f64| {
        let r2 = (x - 24.0).powi(2) + (y - 20.0).powi(2);
        10.0 * (-r2 / 60.0).exp() + 0.05 * x - 0.02 * y
    };
    let truth = Raster::from_fn(w, h, |x, y| surf(x as f64 * pitch, y as f64 * pitch));

    // slopes in rise per pitch, the convention of GradientField
    let d = 1e-5;
    let p = Raster::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64 * pitch, y as f64 * pitch);
        (surf(x + d, y) - surf(x - d, y)) / (2.0 * d)
    });
    let q = Raster::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64 * pitch, y as f64 * pitch);
        (surf(x, y + d) - surf(x, y - d)) / (2.0 * d)
    });

    let depth = integrate(&GradientField::new(p, q)?, pitch)?;
    let truth = detrend(&truth, None, pitch)?;

    let n = (w * h) as f64;
    let rms = (depth
        .z
        .as_slice()
        .iter()
        .zip(truth.z.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    println!("recovered peak-to-valley: {:.4} um", depth.peak_to_valley());
    println!("true peak-to-valley:      {:.4} um", truth.peak_to_valley());
    println!("rms difference:           {rms:.4} um");
    Ok(())
}
