//! Text rendering of the population over detuning and coupling error.
//!
//! ```text
//! cargo run --release --example contour_map [catalog-name]
//! ```

use std::f64::consts::TAU;

use mirror_grape::analysis::contour_grid;
use mirror_grape::pulse::composite;

fn main() -> mirror_grape::error::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "knill".into());
    let rabi = TAU * 200e3;
    let grid = contour_grid(&composite(&name, rabi)?, 2.0 * rabi, 0.3, 41)?;

    // darker glyphs for higher population, one per contour band
    let glyphs = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    println!("{name}: rows coupling scale 1.3 (top) to 0.7, columns δ from -2 Ω to 2 Ω");
    for j in (0..grid.coupling_axis.len()).rev() {
        let row: String = (0..grid.detuning_axis.len())
            .map(|i| {
                let p = grid.population(i, j);
                glyphs[grid.levels.iter().filter(|&&l| p >= l).count().min(glyphs.len() - 1)]
            })
            .collect();
        println!("{:5.2} |{row}|", grid.coupling_axis[j]);
    }
    println!("levels: {:?}", grid.levels);
    Ok(())
}
