//! Soft constraints subtracted from the fidelity objective.
//!
//! ```text
//!     P = w_amp · Σ_k max(0, Ω_k - cap)² Δt_k  +  w_smooth · Σ_k Σ_n ((c⁽ⁿ⁾_{k+1} - c⁽ⁿ⁾_k) / Ω_nom)²
//! ```
//!
//! The smoothness term acts on the Cartesian controls normalized by the
//! nominal Rabi frequency, so it vanishes for any constant waveform and is
//! unchanged by adding 2π to a phase.

use super::gradient::ControlParameterization;
use super::optimize::OptimizationConfig;
use crate::pulse::PulseWaveform;

/// Penalty value and its gradient in the layout of `config.parameterization`.
pub fn penalty(pulse: &PulseWaveform, config: &OptimizationConfig) -> (f64, Vec<f64>) {
    let segs = pulse.segments();
    let n = segs.len();
    // Gradient with respect to the Cartesian controls c1 (first n) and c2.
    let mut d_cart = vec![0.0; 2 * n];
    let mut value = 0.0;

    if config.penalty_amplitude_weight > 0.0 {
        for (k, s) in segs.iter().enumerate() {
            let excess = s.rabi - config.amplitude_cap;
            if excess > 0.0 {
                value += config.penalty_amplitude_weight * excess * excess * s.duration;
                let d_rabi = 2.0 * config.penalty_amplitude_weight * excess * s.duration;
                d_cart[k] += d_rabi * s.phase.cos();
                d_cart[n + k] += d_rabi * s.phase.sin();
            }
        }
    }

    if config.penalty_smoothness_weight > 0.0 && n > 1 {
        let scale = 1.0 / pulse.nominal_rabi();
        let w = config.penalty_smoothness_weight;
        for ch in 0..2 {
            let c = |k: usize| {
                let s = &segs[k];
                scale * s.rabi * if ch == 0 { s.phase.cos() } else { s.phase.sin() }
            };
            for k in 0..n - 1 {
                let diff = c(k + 1) - c(k);
                value += w * diff * diff;
                let d = 2.0 * w * diff * scale;
                d_cart[ch * n + k + 1] += d;
                d_cart[ch * n + k] -= d;
            }
        }
    }

    let grad = match config.parameterization {
        ControlParameterization::Cartesian => d_cart,
        ControlParameterization::PhaseOnly => segs
            .iter()
            .enumerate()
            .map(|(k, s)| s.rabi * (s.phase.cos() * d_cart[n + k] - s.phase.sin() * d_cart[k]))
            .collect(),
    };
    (value, grad)
}
