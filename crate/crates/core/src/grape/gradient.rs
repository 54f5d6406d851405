//! Ensemble fidelity gradient with respect to every slice control.
//!
//! For each member the overlap is `z = <2| U_{N-1} … U_0 |1>`. One forward
//! sweep stores `U_{k-1} … U_0 |1>`, one backward sweep stores
//! `<2| U_{N-1} … U_{k+1}`, and each slice contributes
//! `dz/dc_k = <back_k| ∂U_k/∂c_k |fwd_k>`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expm::{propagator_derivative, Mat2};
use crate::dynamics::{FieldVector, Propagator2};
use crate::ensemble::{Ensemble, EnsembleMember, FidelityKind};
use crate::error::{Error, Result};
use crate::pulse::{PulseSegment, PulseWaveform};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// How slice controls map onto the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlParameterization {
    /// One control per slice: the laser phase. Amplitudes stay fixed.
    PhaseOnly,
    /// Two controls per slice, `c1 = Ω cos φ` and `c2 = Ω sin φ` (rad/s),
    /// laid out channel-major: all `c1` then all `c2`.
    Cartesian,
}

impl ControlParameterization {
    pub fn channels(self) -> usize {
        match self {
            Self::PhaseOnly => 1,
            Self::Cartesian => 2,
        }
    }
}

impl fmt::Display for ControlParameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhaseOnly => "phase_only",
            Self::Cartesian => "cartesian",
        })
    }
}

impl FromStr for ControlParameterization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase_only" | "phase" => Ok(Self::PhaseOnly),
            "cartesian" => Ok(Self::Cartesian),
            other => Err(Error::InvalidArgument(format!("unknown parameterization {other:?}"))),
        }
    }
}

/// Control vector of a pulse in the given parameterization.
pub fn controls(pulse: &PulseWaveform, parameterization: ControlParameterization) -> Vec<f64> {
    let segs = pulse.segments();
    match parameterization {
        ControlParameterization::PhaseOnly => segs.iter().map(|s| s.phase).collect(),
        ControlParameterization::Cartesian => segs
            .iter()
            .map(|s| s.rabi * s.phase.cos())
            .chain(segs.iter().map(|s| s.rabi * s.phase.sin()))
            .collect(),
    }
}

/// Pulse with `template`'s slicing and the given controls.
pub fn apply_controls(
    template: &PulseWaveform,
    parameterization: ControlParameterization,
    values: &[f64],
) -> Result<PulseWaveform> {
    let n = template.len();
    if values.len() != n * parameterization.channels() {
        return Err(Error::InvalidArgument(format!(
            "expected {} controls, got {}",
            n * parameterization.channels(),
            values.len()
        )));
    }
    let segments = template
        .segments()
        .iter()
        .enumerate()
        .map(|(k, s)| match parameterization {
            ControlParameterization::PhaseOnly => PulseSegment {
                phase: values[k],
                ..*s
            },
            ControlParameterization::Cartesian => {
                let (c1, c2) = (values[k], values[n + k]);
                PulseSegment {
                    duration: s.duration,
                    rabi: c1.hypot(c2),
                    phase: if c1 == 0.0 && c2 == 0.0 { 0.0 } else { c2.atan2(c1) },
                }
            }
        })
        .collect();
    PulseWaveform::new(segments, template.nominal_rabi())
}

fn slice_hamiltonian(rabi: f64, phase: f64, detuning: f64) -> Mat2 {
    let off = Complex64::from_polar(0.5 * rabi, phase);
    [
        [Complex64::new(0.5 * detuning, 0.0), off.conj()],
        [off, Complex64::new(-0.5 * detuning, 0.0)],
    ]
}

/// `∂H/∂control` for each channel of one slice, at coupling `scale`.
fn control_directions(seg: &PulseSegment, scale: f64, parameterization: ControlParameterization) -> Vec<Mat2> {
    let half = Complex64::new(0.5 * scale, 0.0);
    match parameterization {
        ControlParameterization::PhaseOnly => {
            let e = Complex64::from_polar(0.5 * scale * seg.rabi, seg.phase);
            vec![[[ZERO, -I * e.conj()], [I * e, ZERO]]]
        }
        ControlParameterization::Cartesian => vec![
            [[ZERO, half], [half, ZERO]],
            [[ZERO, -I * half], [I * half, ZERO]],
        ],
    }
}

fn mat_vec(u: &Propagator2, v: [Complex64; 2]) -> [Complex64; 2] {
    [u.u11 * v[0] + u.u12 * v[1], u.u21 * v[0] + u.u22 * v[1]]
}

fn vec_mat(v: [Complex64; 2], u: &Propagator2) -> [Complex64; 2] {
    [v[0] * u.u11 + v[1] * u.u21, v[0] * u.u12 + v[1] * u.u22]
}

fn sandwich(bra: [Complex64; 2], m: &Mat2, ket: [Complex64; 2]) -> Complex64 {
    let mk = [m[0][0] * ket[0] + m[0][1] * ket[1], m[1][0] * ket[0] + m[1][1] * ket[1]];
    bra[0] * mk[0] + bra[1] * mk[1]
}

/// Fidelity and its gradient for one member, unweighted.
fn member_gradient(
    pulse: &PulseWaveform,
    member: &EnsembleMember,
    kind: FidelityKind,
    parameterization: ControlParameterization,
) -> (f64, Vec<f64>) {
    let segs = pulse.segments();
    let n = segs.len();
    let scale = member.coupling_scale;
    let detuning = member.detuning_offset;

    let props: Vec<Propagator2> = segs
        .iter()
        .map(|s| FieldVector::new(scale * s.rabi, s.phase, detuning).propagator(s.duration))
        .collect();

    let mut forward = Vec::with_capacity(n + 1);
    forward.push([Complex64::new(1.0, 0.0), ZERO]);
    for u in &props {
        let next = mat_vec(u, *forward.last().expect("non-empty"));
        forward.push(next);
    }
    let mut backward = vec![[ZERO; 2]; n];
    let mut bra = [ZERO, Complex64::new(1.0, 0.0)];
    for k in (0..n).rev() {
        backward[k] = bra;
        bra = vec_mat(bra, &props[k]);
    }
    let overlap = forward[n][1];

    let channels = parameterization.channels();
    let mut grad = vec![0.0; n * channels];
    for (k, seg) in segs.iter().enumerate() {
        let h = slice_hamiltonian(scale * seg.rabi, seg.phase, detuning);
        for (ch, dir) in control_directions(seg, scale, parameterization).iter().enumerate() {
            let (_, du) = propagator_derivative(&h, dir, seg.duration);
            let dz = sandwich(backward[k], &du, forward[k]);
            grad[ch * n + k] = kind.differential(overlap, dz);
        }
    }
    (kind.evaluate(overlap), grad)
}

/// Ensemble-weighted fidelity and `∂F/∂control` for every slice and channel.
pub fn fidelity_and_gradient(
    pulse: &PulseWaveform,
    ensemble: &Ensemble,
    kind: FidelityKind,
    parameterization: ControlParameterization,
) -> Result<(f64, Vec<f64>)> {
    if pulse.uniform_timestep().is_none() {
        return Err(Error::InvalidArgument(
            "gradient requires a pulse sliced at a uniform timestep".into(),
        ));
    }
    let per_member: Vec<(f64, Vec<f64>)> = ensemble
        .members()
        .par_iter()
        .map(|m| member_gradient(pulse, m, kind, parameterization))
        .collect();

    let mut value = 0.0;
    let mut grad = vec![0.0; pulse.len() * parameterization.channels()];
    for (member, (f, g)) in ensemble.members().iter().zip(&per_member) {
        value += member.weight * f;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += member.weight * gi;
        }
    }
    Ok((value, grad))
}

pub fn fidelity_gradient(
    pulse: &PulseWaveform,
    ensemble: &Ensemble,
    kind: FidelityKind,
    parameterization: ControlParameterization,
) -> Result<Vec<f64>> {
    fidelity_and_gradient(pulse, ensemble, kind, parameterization).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::ensemble_fidelity;
    use crate::pulse::{composite, rectangular, PulseWaveform};
    use std::f64::consts::{FRAC_PI_2, PI};

    const OMEGA: f64 = 2.0 * PI * 200e3;

    #[test]
    fn controls_round_trip() {
        let pulse = PulseWaveform::random_phase(OMEGA, 2e-6, 100e-9, 3).unwrap();
        for p in [ControlParameterization::PhaseOnly, ControlParameterization::Cartesian] {
            let back = apply_controls(&pulse, p, &controls(&pulse, p)).unwrap();
            for (a, b) in back.segments().iter().zip(pulse.segments()) {
                assert!((a.rabi - b.rabi).abs() < 1e-9 * OMEGA);
                assert!((Complex64::from_polar(1.0, a.phase) - Complex64::from_polar(1.0, b.phase)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn optimal_pulse_is_stationary() {
        let pulse = rectangular(PI, FRAC_PI_2, OMEGA).unwrap();
        for p in [ControlParameterization::PhaseOnly, ControlParameterization::Cartesian] {
            let g = fidelity_gradient(&pulse, &Ensemble::resonant(), FidelityKind::RealOverlap, p).unwrap();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm * if p == ControlParameterization::Cartesian { OMEGA } else { 1.0 } < 1e-8);
        }
    }

    #[test]
    fn value_matches_forward_evaluation() {
        let pulse = PulseWaveform::random_phase(OMEGA, 1.5e-6, 100e-9, 11).unwrap();
        let ensemble = crate::ensemble::build_ensemble(&crate::ensemble::EnsembleGrid::new(3, 1.0, 2, 0.1, 2), OMEGA).unwrap();
        for kind in FidelityKind::ALL {
            let (v, _) = fidelity_and_gradient(&pulse, &ensemble, kind, ControlParameterization::PhaseOnly).unwrap();
            assert!((v - ensemble_fidelity(&pulse, &ensemble, kind)).abs() < 1e-13);
        }
    }

    #[test]
    fn non_uniform_slicing_rejected() {
        let pulse = composite("waltz", OMEGA).unwrap();
        let err = fidelity_gradient(&pulse, &Ensemble::resonant(), FidelityKind::RealOverlap, ControlParameterization::PhaseOnly);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
