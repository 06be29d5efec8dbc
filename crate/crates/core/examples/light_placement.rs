//! Usable dark-field light heights for a few objectives and substrates.
//!
//! cargo run --example light_placement

use viascope::prelude::*;

fn main() -> Result<()> {
    let offset_mm = 20.0;
    let substrates = [
        SubstrateSpec::glass(),
        SubstrateSpec::silicon(),
        SubstrateSpec::new("sapphire", 1.77),
    ];
    println!("lateral offset {offset_mm} mm");
    for na in [0.1, 0.2, 0.3, 0.4] {
        let objective = ObjectiveSpec::in_air(na);
        for sub in &substrates {
            let range = match light_height_range(&objective, sub, offset_mm)? {
                HeightRange::Range { min, max } => format!("{min:8.3} .. {max:8.3} mm"),
                HeightRange::Empty => "no usable height".to_string(),
            };
            println!("NA {na:.2} on {:<9} {range}", sub.name);
        }
    }
    Ok(())
}
