//! Helpers shared by the integration targets.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mirror_grape::ensemble::{Ensemble, EnsembleMember, FidelityKind};
use mirror_grape::grape::{apply_controls, controls, fidelity_and_gradient, ControlParameterization};
use mirror_grape::pulse::{PulseSegment, PulseWaveform};

pub const OMEGA: f64 = TAU * 200e3;
pub const TIMESTEP: f64 = 100e-9;

/// Uniformly sliced pulse with random amplitudes in `[0.5, 1.5] Ω` and random phases.
pub fn random_pulse(rng: &mut ChaCha8Rng, slices: usize) -> PulseWaveform {
    let segments = (0..slices)
        .map(|_| PulseSegment {
            duration: TIMESTEP,
            rabi: OMEGA * rng.gen_range(0.5..1.5),
            phase: rng.gen_range(-PI..PI),
        })
        .collect();
    PulseWaveform::new(segments, OMEGA).unwrap()
}

/// A few members spread over ±1.5 Ω and ±10 % coupling with random weights.
pub fn random_ensemble(rng: &mut ChaCha8Rng, size: usize) -> Ensemble {
    let members = (0..size)
        .map(|_| EnsembleMember {
            detuning_offset: OMEGA * rng.gen_range(-1.5..1.5),
            coupling_scale: rng.gen_range(0.9..1.1),
            weight: rng.gen_range(0.1..1.0),
        })
        .collect();
    Ensemble::normalized(members).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative 2-norm error between the analytic gradient and central finite
/// differences. Steps are scaled to each parameterization's control size.
pub fn gradient_fd_error(
    pulse: &PulseWaveform,
    ensemble: &Ensemble,
    kind: FidelityKind,
    parameterization: ControlParameterization,
) -> f64 {
    let (_, analytic) = fidelity_and_gradient(pulse, ensemble, kind, parameterization).unwrap();
    let x = controls(pulse, parameterization);
    let h = match parameterization {
        ControlParameterization::PhaseOnly => 1e-5,
        ControlParameterization::Cartesian => 1e-5 * pulse.nominal_rabi(),
    };
    let value = |x: &[f64]| {
        let p = apply_controls(pulse, parameterization, x).unwrap();
        fidelity_and_gradient(&p, ensemble, kind, parameterization).unwrap().0
    };
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..x.len() {
        let mut up = x.clone();
        let mut down = x.clone();
        up[i] += h;
        down[i] -= h;
        let fd = (value(&up) - value(&down)) / (2.0 * h);
        diff += (fd - analytic[i]).powi(2);
        norm += analytic[i].powi(2);
    }
    (diff / norm).sqrt()
}

/// Largest relative disagreement between the phase-only gradient and the
/// Cartesian gradient mapped through `∂c1/∂φ = -c2`, `∂c2/∂φ = c1`.
pub fn chain_rule_error(pulse: &PulseWaveform, ensemble: &Ensemble, kind: FidelityKind) -> f64 {
    let (_, gp) = fidelity_and_gradient(pulse, ensemble, kind, ControlParameterization::PhaseOnly).unwrap();
    let (_, gc) = fidelity_and_gradient(pulse, ensemble, kind, ControlParameterization::Cartesian).unwrap();
    let c = controls(pulse, ControlParameterization::Cartesian);
    let n = pulse.len();
    let scale = gp.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    (0..n)
        .map(|k| (gp[k] - (-c[n + k] * gc[k] + c[k] * gc[n + k])).abs() / scale)
        .fold(0.0, f64::max)
}
