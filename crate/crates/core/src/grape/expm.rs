//! Slice propagator derivatives from the exponential of an augmented block matrix.
//!
//! For a slice generator `A = -iHΔt` and a control direction `E = -i(∂H/∂c)Δt`,
//!
//! ```text
//!     exp | A  E | = | e^A  D |
//!         | 0  A |   | 0   e^A|
//! ```
//!
//! where `D` is the exact derivative of `e^{A + cE}` at `c = 0`.

use num_complex::Complex64;

pub type Mat2 = [[Complex64; 2]; 2];
pub type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Accuracy target for the slice propagator and its derivative.
pub const EXPM_TOLERANCE: f64 = 1e-13;

fn matmul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Induced 1-norm (max column sum).
fn norm1(a: &Mat4) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm4(a: &Mat4) -> Mat4 {
    let norm = norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let scaled: Mat4 = a.map(|row| row.map(|z| z * scale));

    let mut result = [[ZERO; 4]; 4];
    for (i, row) in result.iter_mut().enumerate() {
        row[i] = ONE;
    }
    let mut term = result;
    for k in 1..40 {
        term = matmul4(&term, &scaled);
        let inv_k = 1.0 / k as f64;
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z *= inv_k;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                result[i][j] += term[i][j];
            }
        }
        if norm1(&term) <= f64::EPSILON * norm1(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul4(&result, &result);
    }
    result
}

/// Returns `(exp(-iHΔt), d/dc exp(-i(H + c·dH)Δt) at c = 0)`.
pub fn propagator_derivative(hamiltonian: &Mat2, direction: &Mat2, dt: f64) -> (Mat2, Mat2) {
    let minus_i_dt = Complex64::new(0.0, -dt);
    let mut block = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let a = minus_i_dt * hamiltonian[i][j];
            block[i][j] = a;
            block[i + 2][j + 2] = a;
            block[i][j + 2] = minus_i_dt * direction[i][j];
        }
    }
    let e = expm4(&block);
    let u = [[e[0][0], e[0][1]], [e[1][0], e[1][1]]];
    let du = [[e[0][2], e[0][3]], [e[1][2], e[1][3]]];
    (u, du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FieldVector;

    fn hamiltonian(rabi: f64, phase: f64, detuning: f64) -> Mat2 {
        let off = Complex64::from_polar(0.5 * rabi, phase);
        [
            [Complex64::new(0.5 * detuning, 0.0), off.conj()],
            [off, Complex64::new(-0.5 * detuning, 0.0)],
        ]
    }

    #[test]
    fn upper_left_block_matches_closed_form() {
        for &(rabi, phase, detuning, dt) in &[
            (1.0, 0.3, 0.0, 0.7),
            (2.0, -1.1, 1.5, 0.05),
            (0.0, 0.0, 3.0, 2.0),
            (1.26e6, 2.0, -0.8e6, 1e-7),
            (1.0, 0.0, 0.0, 40.0),
        ] {
            let h = hamiltonian(rabi, phase, detuning);
            let (u, _) = propagator_derivative(&h, &h, dt);
            let exact = FieldVector::new(rabi, phase, detuning).propagator(dt);
            let pairs = [
                (u[0][0], exact.u11),
                (u[0][1], exact.u12),
                (u[1][0], exact.u21),
                (u[1][1], exact.u22),
            ];
            for (a, b) in pairs {
                assert!((a - b).norm() < EXPM_TOLERANCE, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference_in_phase() {
        let (rabi, phase, detuning, dt) = (1.3, 0.4, 0.9, 0.8);
        let h = hamiltonian(rabi, phase, detuning);
        let i = Complex64::new(0.0, 1.0);
        let dir = [
            [ZERO, -i * Complex64::from_polar(0.5 * rabi, -phase)],
            [i * Complex64::from_polar(0.5 * rabi, phase), ZERO],
        ];
        let (_, du) = propagator_derivative(&h, &dir, dt);
        let step = 1e-6;
        let plus = FieldVector::new(rabi, phase + step, detuning).propagator(dt);
        let minus = FieldVector::new(rabi, phase - step, detuning).propagator(dt);
        let fd = (plus.u21 - minus.u21) / (2.0 * step);
        assert!((du[1][0] - fd).norm() < 1e-9);
        let fd = (plus.u11 - minus.u11) / (2.0 * step);
        assert!((du[0][0] - fd).norm() < 1e-9);
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let e = expm4(&[[ZERO; 4]; 4]);
        for (i, row) in e.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                assert_eq!(*z, if i == j { ONE } else { ZERO });
            }
        }
    }
}
