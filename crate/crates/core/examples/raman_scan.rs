//! Raman-detuning scans through a Zeeman-split, Doppler-broadened ensemble.
//!
//! ```text
//! cargo run --release --example raman_scan [pulse.json]
//! ```

use std::f64::consts::{PI, TAU};
use std::path::Path;

use mirror_grape::io::load_pulse;
use mirror_grape::pulse::{composite, rectangular};
use mirror_grape::raman::{peak_population, raman_scan, RamanScanConfig};

fn main() -> mirror_grape::error::Result<()> {
    let rabi = TAU * 360e3;
    let config = RamanScanConfig::standard(rabi)?;
    let mut pulses = vec![
        ("rectangular".to_string(), rectangular(PI, 0.0, rabi)?),
        ("waltz".to_string(), composite("waltz", rabi)?),
    ];
    if let Some(path) = std::env::args().nth(1) {
        pulses.push(("designed".to_string(), load_pulse(Path::new(&path))?));
    }
    let mut baseline = None;
    for (name, pulse) in &pulses {
        let curve = raman_scan(pulse, &config)?;
        let peak = peak_population(&curve)?;
        let base = *baseline.get_or_insert(peak.population);
        println!(
            "{name:>12}: peak {:.3} at δ_L = {:+.3} Ω   ({:.2}x rectangular)",
            peak.population,
            peak.laser_detuning / rabi,
            peak.population / base
        );
    }
    Ok(())
}
