mod common;

use common::{chain_rule_error, gradient_fd_error, random_ensemble, random_pulse, rng};
use mirror_grape::ensemble::FidelityKind;
use mirror_grape::grape::ControlParameterization;

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut r = rng(7);
    for trial in 0..10 {
        let slices = 8 + (trial * 24) / 9;
        let pulse = random_pulse(&mut r, slices);
        let ensemble = random_ensemble(&mut r, 5);
        for kind in FidelityKind::ALL {
            for parameterization in [ControlParameterization::PhaseOnly, ControlParameterization::Cartesian] {
                let err = gradient_fd_error(&pulse, &ensemble, kind, parameterization);
                assert!(err < 1e-6, "trial {trial}, {kind}, {parameterization}: relative error {err:e}");
            }
        }
    }
}

#[test]
fn phase_gradient_is_the_cartesian_gradient_rotated() {
    let mut r = rng(11);
    for _ in 0..10 {
        let pulse = random_pulse(&mut r, 16);
        let ensemble = random_ensemble(&mut r, 4);
        for kind in FidelityKind::ALL {
            let err = chain_rule_error(&pulse, &ensemble, kind);
            assert!(err < 1e-10, "{kind}: {err:e}");
        }
    }
}
