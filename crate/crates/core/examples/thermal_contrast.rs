//! Fringe contrast of a π/2-π-π/2 interferometer against cloud temperature,
//! for catalog mirrors and an optional designed mirror loaded from a pulse file.
//!
//! ```text
//! cargo run --release --example thermal_contrast [mirror.json]
//! ```

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use mirror_grape::interferometer::{contrast_sweep, ThermalModel};
use mirror_grape::io::load_pulse;
use mirror_grape::pulse::{composite, rectangular};

fn main() -> mirror_grape::error::Result<()> {
    let rabi = TAU * 200e3;
    let beamsplitter = rectangular(FRAC_PI_2, 0.0, rabi)?;
    let mut mirrors = vec![
        ("rectangular".to_string(), rectangular(PI, 0.0, rabi)?),
        ("knill".to_string(), composite("knill", rabi)?),
    ];
    if let Some(path) = std::env::args().nth(1) {
        mirrors.push(("designed".to_string(), load_pulse(Path::new(&path))?));
    }
    let temperatures: Vec<f64> = [0.1, 1.0, 5.0, 20.0, 50.0, 100.0, 300.0, 1000.0]
        .iter()
        .map(|t| t * 1e-6)
        .collect();
    let model = ThermalModel::rb85(temperatures[0]);
    let rows = contrast_sweep(&beamsplitter, &mirrors, &temperatures, &model)?;

    print!("{:>10}", "T (µK)");
    for (name, _) in &mirrors {
        print!("  {name:>11}");
    }
    println!("  {:>11}", "perfect π");
    for (k, t) in temperatures.iter().enumerate() {
        print!("{:>10.1}", t * 1e6);
        // mirror-major ordering: row m * n_temps + k
        for m in 0..=mirrors.len() {
            print!("  {:>11.4}", rows[m * temperatures.len() + k].contrast);
        }
        println!();
    }
    Ok(())
}
