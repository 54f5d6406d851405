mod common;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use common::{random_pulse, rng, OMEGA, TIMESTEP};
use mirror_grape::analysis::{robustness_report, robustness_report_with_step};
use mirror_grape::dynamics::{compose, excited_population, propagate_waveform, segment_propagator};
use mirror_grape::ensemble::{ensemble_fidelity, member_fidelity, Ensemble, EnsembleMember, FidelityKind};
use mirror_grape::interferometer::{
    fringe_decomposition, fringe_phasor, mz_population, mz_population_direct, thermal_contrast, MachZehnderConfig, Mirror,
    ThermalModel,
};
use mirror_grape::pulse::{composite, rectangular, PulseSegment, PulseWaveform, CATALOG};
use mirror_grape::raman::{delta_momentum, raman_scan, RamanScanConfig, Sublevel, SublevelSet};

fn arb_pulse(max_slices: usize) -> impl Strategy<Value = PulseWaveform> {
    prop::collection::vec((0.0..2.0f64, -PI..PI), 1..=max_slices).prop_map(|fields| {
        let segments = fields
            .into_iter()
            .map(|(a, phase)| PulseSegment {
                duration: TIMESTEP,
                rabi: a * OMEGA,
                phase,
            })
            .collect();
        PulseWaveform::new(segments, OMEGA).unwrap()
    })
}

fn arb_member() -> impl Strategy<Value = EnsembleMember> {
    (-3.0..3.0f64, 0.5..1.5f64).prop_map(|(d, scale)| EnsembleMember {
        detuning_offset: d * OMEGA,
        coupling_scale: scale,
        weight: 1.0,
    })
}

fn mz(beamsplitter: &PulseWaveform, mirror: &PulseWaveform, phi: f64) -> MachZehnderConfig {
    MachZehnderConfig {
        beamsplitter: beamsplitter.clone(),
        mirror: mirror.clone(),
        interferometric_phase: phi,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn waveform_propagators_are_unitary(pulse in arb_pulse(400), d in -5.0..5.0f64, scale in 0.0..2.0f64) {
        let u = propagate_waveform(&pulse, d * OMEGA, scale).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-12);
        prop_assert!((u.determinant() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn segments_compose_as_a_semigroup(
        a in 0.0..3.0f64, phase in -PI..PI, d in -3.0..3.0f64, t1 in 0.0..5.0f64, t2 in 0.0..5.0f64,
    ) {
        let (rabi, detuning) = (a * OMEGA, d * OMEGA);
        let (t1, t2) = (t1 / OMEGA, t2 / OMEGA);
        let split = compose(&[
            segment_propagator(rabi, phase, detuning, t1).unwrap(),
            segment_propagator(rabi, phase, detuning, t2).unwrap(),
        ]).unwrap();
        let whole = segment_propagator(rabi, phase, detuning, t1 + t2).unwrap();
        prop_assert!(split.max_abs_diff(&whole) < 1e-12);
    }

    #[test]
    fn population_ignores_global_phase(pulse in arb_pulse(50), d in -3.0..3.0f64, g in -PI..PI) {
        let u = propagate_waveform(&pulse, d * OMEGA, 1.0).unwrap();
        let w = Complex64::from_polar(1.0, g);
        let mut v = u;
        for z in [&mut v.u11, &mut v.u12, &mut v.u21, &mut v.u22] {
            *z *= w;
        }
        prop_assert!((excited_population(&u) - excited_population(&v)).abs() < 1e-15);
    }

    #[test]
    fn square_fidelity_is_the_squared_overlap(pulse in arb_pulse(60), member in arb_member()) {
        let re = member_fidelity(&pulse, &member, FidelityKind::RealOverlap);
        let im = member_fidelity(&pulse, &member, FidelityKind::ImagOverlap);
        let sq = member_fidelity(&pulse, &member, FidelityKind::SquareOverlap);
        prop_assert_eq!(sq, re * re + im * im);
    }

    #[test]
    fn full_turn_of_every_phase_changes_nothing(pulse in arb_pulse(60), member in arb_member()) {
        let turned = pulse.phase_offset(TAU);
        for kind in FidelityKind::ALL {
            let a = member_fidelity(&pulse, &member, kind);
            let b = member_fidelity(&turned, &member, kind);
            prop_assert!((a - b).abs() < 1e-12, "{kind}: {a} vs {b}");
        }
    }

    #[test]
    fn ensemble_average_ignores_order_and_splitting(
        pulse in arb_pulse(30),
        members in prop::collection::vec(arb_member(), 1..8),
        split in 0usize..8,
    ) {
        let base = Ensemble::normalized(members.clone()).unwrap();
        let mut reversed = members.clone();
        reversed.reverse();
        let reversed = Ensemble::normalized(reversed).unwrap();
        let k = split % members.len();
        let mut halves = members.clone();
        halves[k].weight *= 0.5;
        halves.push(halves[k]);
        let halves = Ensemble::normalized(halves).unwrap();
        for kind in FidelityKind::ALL {
            let f = ensemble_fidelity(&pulse, &base, kind);
            prop_assert!((f - ensemble_fidelity(&pulse, &reversed, kind)).abs() < 1e-13);
            prop_assert!((f - ensemble_fidelity(&pulse, &halves, kind)).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_fringe_matches_path_propagation(
        bs in arb_pulse(12), mirror in arb_pulse(24), d in -3.0..3.0f64, scale in 0.5..1.5f64, phi in -PI..PI,
    ) {
        let cfg = mz(&bs, &mirror, phi);
        let closed = mz_population(&cfg, d * OMEGA, scale);
        let direct = mz_population_direct(&cfg, d * OMEGA, scale);
        prop_assert!((closed - direct).abs() < 1e-12, "{closed} vs {direct}");
    }

    #[test]
    fn fringe_parameters_stay_physical(bs in arb_pulse(12), mirror in arb_pulse(24), d in -3.0..3.0f64) {
        let f = fringe_decomposition(&bs, &Mirror::Pulse(mirror), d * OMEGA, 1.0);
        prop_assert!(f.contrast_b >= 0.0);
        for v in [(f.offset_a + f.contrast_b) / 2.0, (f.offset_a - f.contrast_b) / 2.0] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }
}

#[test]
fn long_waveforms_stay_unitary() {
    let pulse = random_pulse(&mut rng(3), 10_000);
    for d in [-2.0, 0.0, 0.7, 3.0] {
        let u = propagate_waveform(&pulse, d * OMEGA, 1.1).unwrap();
        assert!(u.unitarity_defect() < 1e-12, "δ = {d} Ω: {:e}", u.unitarity_defect());
    }
}

#[test]
fn generalized_rabi_formula_on_a_grid() {
    let t = 1.3e-6;
    for i in 0..50 {
        for j in 0..50 {
            let rabi = OMEGA * (0.1 + 2.9 * i as f64 / 49.0);
            let d = OMEGA * (-3.0 + 6.0 * j as f64 / 49.0);
            let g = rabi.hypot(d);
            let expected = (rabi / g).powi(2) * (0.5 * g * t).sin().powi(2);
            let p = excited_population(&segment_propagator(rabi, 0.4, d, t).unwrap());
            assert!((p - expected).abs() < 1e-12, "Ω = {rabi}, δ = {d}");
        }
    }
}

#[test]
fn closed_form_fringe_on_a_detuning_coupling_grid() {
    let bs = rectangular(FRAC_PI_2, 0.0, OMEGA).unwrap();
    let mirrors = [
        rectangular(PI, 0.0, OMEGA).unwrap(),
        composite("knill", OMEGA).unwrap(),
        random_pulse(&mut rng(5), 100),
    ];
    let mut worst = 0.0_f64;
    for mirror in &mirrors {
        for phi in [0.0, 1.0, PI] {
            let cfg = mz(&bs, mirror, phi);
            for i in 0..20 {
                for j in 0..20 {
                    let d = OMEGA * (-2.0 + 4.0 * i as f64 / 19.0);
                    let scale = 0.7 + 0.6 * j as f64 / 19.0;
                    worst = worst.max((mz_population(&cfg, d, scale) - mz_population_direct(&cfg, d, scale)).abs());
                }
            }
        }
    }
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn rectangular_fringe_is_a_pure_cosine() {
    let bs = rectangular(FRAC_PI_2, 0.0, OMEGA).unwrap();
    let mirror = rectangular(PI, 0.0, OMEGA).unwrap();
    for d in [0.0, 0.3, 0.5, 1.2] {
        let f = fringe_decomposition(&bs, &Mirror::Pulse(mirror.clone()), d * OMEGA, 1.0);
        for k in 0..32 {
            let phi = TAU * k as f64 / 32.0;
            let direct = mz_population(&mz(&bs, &mirror, phi), d * OMEGA, 1.0);
            assert!((f.population(phi) - direct).abs() < 1e-9);
        }
    }
}

#[test]
fn quadrature_order_doubling_is_stable() {
    let bs = rectangular(FRAC_PI_2, 0.0, OMEGA).unwrap();
    let mirrors = [
        Mirror::Pulse(rectangular(PI, 0.0, OMEGA).unwrap()),
        Mirror::Pulse(composite("knill", OMEGA).unwrap()),
        Mirror::PerfectPi,
    ];
    for mirror in &mirrors {
        for t in [20e-6, 100e-6] {
            let model = ThermalModel::rb85(t);
            let base = thermal_contrast(&bs, mirror, &model).unwrap();
            let doubled = thermal_contrast(
                &bs,
                mirror,
                &ThermalModel {
                    quadrature_order: 2 * model.quadrature_order,
                    ..model
                },
            )
            .unwrap();
            assert!((base - doubled).abs() < 1e-6, "T = {t}: {base} vs {doubled}");
        }
    }
}

/// Trapezoid integration of the fringe phasor against the Doppler Gaussian.
fn dense_contrast(bs: &PulseWaveform, mirror: &Mirror, model: &ThermalModel) -> f64 {
    let sigma = model.detuning_std();
    let n = 8001;
    let half = 10.0 * sigma;
    let h = 2.0 * half / (n - 1) as f64;
    let total: Complex64 = (0..n)
        .map(|k| {
            let d = -half + h * k as f64;
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            w * h * (-0.5 * (d / sigma).powi(2)).exp() * fringe_phasor(bs, mirror, d)
        })
        .sum();
    (total / (SQRT_2 * PI.sqrt() * sigma)).norm()
}

#[test]
fn rectangular_mirror_contrast_falls_with_temperature() {
    let bs = rectangular(FRAC_PI_2, 0.0, OMEGA).unwrap();
    let mirror = Mirror::Pulse(rectangular(PI, 0.0, OMEGA).unwrap());
    let temps = [0.1, 0.3, 1.0, 3.0, 10.0, 20.0, 30.0, 50.0, 100.0, 200.0, 300.0, 500.0, 1000.0];
    let mut last = f64::INFINITY;
    for t in temps {
        let model = ThermalModel::rb85(t * 1e-6);
        let c = thermal_contrast(&bs, &mirror, &model).unwrap();
        let dense = dense_contrast(&bs, &mirror, &model);
        assert!((c - dense).abs() < 1e-6, "T = {t} µK: quadrature {c} vs dense {dense}");
        assert!(c <= last, "contrast rose at {t} µK");
        assert!((0.0..=1.0).contains(&c));
        last = c;
    }
}

#[test]
fn robustness_widths_are_grid_converged() {
    for entry in CATALOG {
        let pulse = composite(entry.name, OMEGA).unwrap();
        let coarse = robustness_report(&pulse).unwrap();
        let fine = robustness_report_with_step(&pulse, 5e-4).unwrap();
        assert_abs_diff_eq!(coarse.width_half, fine.width_half, epsilon = 0.002);
        assert_abs_diff_eq!(coarse.width_ninety, fine.width_ninety, epsilon = 0.002);
    }
}

#[test]
fn unit_sublevel_at_rest_reproduces_the_detuning_response() {
    let pulse = composite("waltz", OMEGA).unwrap();
    let single = SublevelSet::new(vec![Sublevel {
        m_f: 0,
        coupling_factor: 1.0,
        stark_shift: 0.0,
        weight: 1.0,
    }])
    .unwrap();
    let config = RamanScanConfig {
        laser_detuning_grid: (0..81).map(|k| OMEGA * (-2.0 + 0.05 * k as f64)).collect(),
        sublevels: single,
        momentum: delta_momentum(),
        nominal_rabi: OMEGA,
    };
    for point in raman_scan(&pulse, &config).unwrap() {
        let u = propagate_waveform(&pulse, point.laser_detuning, 1.0).unwrap();
        assert!((point.population - excited_population(&u)).abs() < 1e-12);
    }
}
