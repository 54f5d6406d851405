//! Excited population and S-phase against detuning for a few catalog pulses.
//!
//! ```text
//! cargo run --release --example response_curves
//! ```

use std::f64::consts::TAU;

use mirror_grape::analysis::response_curve;
use mirror_grape::pulse::composite;

fn main() -> mirror_grape::error::Result<()> {
    let rabi = TAU * 200e3;
    let names = ["rectangular", "waltz", "knill", "bb1"];
    let curves = names
        .iter()
        .map(|n| response_curve(&composite(n, rabi)?, 2.0 * rabi, 17))
        .collect::<mirror_grape::error::Result<Vec<_>>>()?;

    print!("{:>7}", "δ/Ω");
    for n in names {
        print!("  {n:>17}");
    }
    println!();
    for i in 0..curves[0].len() {
        print!("{:>7.2}", curves[0][i].detuning / rabi);
        for c in &curves {
            // population, then the S-phase relative to resonance
            print!("  {:>7.4} {:>+8.3}", c[i].population, c[i].phase);
        }
        println!();
    }
    Ok(())
}
