//! Exact rotating-frame dynamics of a driven two-level system.
//!
//! A pulse slice with constant Rabi frequency `Ω`, laser phase `φ` and
//! detuning `δ` rotates the Bloch vector about the field vector
//! `(Ω cos φ, Ω sin φ, δ)`. Its propagator has the closed form
//!
//! ```text
//!     U = | C*    -i S* |      C = cos(Ω̃t/2) + i (δ/Ω̃) sin(Ω̃t/2)
//!         | -i S   C    |      S = e^{iφ} (Ω/Ω̃) sin(Ω̃t/2)
//! ```
//!
//! with `Ω̃ = sqrt(Ω² + δ²)`. Everything here works in angular frequency
//! (rad/s) and seconds.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::pulse::PulseWaveform;

/// Complex amplitude or matrix element.
pub type ComplexPair = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this magnitude `<2|U|1>` has no usable phase.
pub const PHASE_THRESHOLD: f64 = 1e-12;

/// Field vector `(Ω cos φ, Ω sin φ, δ)` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub omega_x: f64,
    pub omega_y: f64,
    pub delta: f64,
}

impl FieldVector {
    pub fn new(rabi: f64, phase: f64, detuning: f64) -> Self {
        let (sin, cos) = phase.sin_cos();
        Self {
            omega_x: rabi * cos,
            omega_y: rabi * sin,
            delta: detuning,
        }
    }

    /// Transverse (driving) magnitude `Ω_R`.
    pub fn rabi(&self) -> f64 {
        self.omega_x.hypot(self.omega_y)
    }

    /// Generalized Rabi frequency `Ω̃`.
    pub fn magnitude(&self) -> f64 {
        self.rabi().hypot(self.delta)
    }

    /// Propagator for holding this field vector for `duration` seconds.
    pub fn propagator(&self, duration: f64) -> Propagator2 {
        let magnitude = self.magnitude();
        if magnitude == 0.0 || duration == 0.0 {
            return Propagator2::identity();
        }
        let half_angle = 0.5 * magnitude * duration;
        let (sin, cos) = half_angle.sin_cos();
        let c = Complex64::new(cos, self.delta / magnitude * sin);
        let s = Complex64::new(self.omega_x, self.omega_y) * (sin / magnitude);
        Propagator2::from_cs(c, s)
    }
}

/// A 2×2 unitary acting on `(c1, c2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator2 {
    pub u11: ComplexPair,
    pub u12: ComplexPair,
    pub u21: ComplexPair,
    pub u22: ComplexPair,
}

impl Propagator2 {
    pub fn identity() -> Self {
        Self {
            u11: Complex64::new(1.0, 0.0),
            u12: Complex64::new(0.0, 0.0),
            u21: Complex64::new(0.0, 0.0),
            u22: Complex64::new(1.0, 0.0),
        }
    }

    /// Builds `[[C*, -iS*], [-iS, C]]`.
    pub fn from_cs(c: Complex64, s: Complex64) -> Self {
        Self {
            u11: c.conj(),
            u12: -I * s.conj(),
            u21: -I * s,
            u22: c,
        }
    }

    /// The `C` element (`u22`).
    pub fn c(&self) -> Complex64 {
        self.u22
    }

    /// The `S` element, recovered from `u21 = -iS`.
    pub fn s(&self) -> Complex64 {
        I * self.u21
    }

    pub fn dagger(&self) -> Self {
        Self {
            u11: self.u11.conj(),
            u12: self.u21.conj(),
            u21: self.u12.conj(),
            u22: self.u22.conj(),
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.u11 * self.u22 - self.u12 * self.u21
    }

    /// `max |(U†U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.dagger() * *self;
        [p.u11 - 1.0, p.u12, p.u21, p.u22 - 1.0]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Elementwise maximum distance to another propagator.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.u11 - other.u11,
            self.u12 - other.u12,
            self.u21 - other.u21,
            self.u22 - other.u22,
        ]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
    }

    /// Shifts the laser phase of the pulse by `shift`: `S → S e^{i shift}`, `C` unchanged.
    pub fn phase_shifted(&self, shift: f64) -> Self {
        let rot = Complex64::from_polar(1.0, shift);
        Self {
            u11: self.u11,
            u12: self.u12 * rot.conj(),
            u21: self.u21 * rot,
            u22: self.u22,
        }
    }

    pub fn apply(&self, state: &TwoLevelState) -> TwoLevelState {
        TwoLevelState {
            c1: self.u11 * state.c1 + self.u12 * state.c2,
            c2: self.u21 * state.c1 + self.u22 * state.c2,
        }
    }
}

/// Matrix product: `later * earlier` applies `earlier` first.
impl Mul for Propagator2 {
    type Output = Propagator2;

    fn mul(self, rhs: Propagator2) -> Propagator2 {
        Propagator2 {
            u11: self.u11 * rhs.u11 + self.u12 * rhs.u21,
            u12: self.u11 * rhs.u12 + self.u12 * rhs.u22,
            u21: self.u21 * rhs.u11 + self.u22 * rhs.u21,
            u22: self.u21 * rhs.u12 + self.u22 * rhs.u22,
        }
    }
}

/// Pure state `c1 |1> + c2 |2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub c1: ComplexPair,
    pub c2: ComplexPair,
}

impl TwoLevelState {
    pub const NORM_TOLERANCE: f64 = 1e-12;

    pub fn new(c1: ComplexPair, c2: ComplexPair) -> Result<Self> {
        for z in [c1, c2] {
            ensure_finite("state amplitude", z.re)?;
            ensure_finite("state amplitude", z.im)?;
        }
        let norm = c1.norm_sqr() + c2.norm_sqr();
        if (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized: |c1|^2 + |c2|^2 = {norm}"
            )));
        }
        Ok(Self { c1, c2 })
    }

    pub fn ground() -> Self {
        Self {
            c1: Complex64::new(1.0, 0.0),
            c2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        Self {
            c1: Complex64::new(0.0, 0.0),
            c2: Complex64::new(1.0, 0.0),
        }
    }
}

/// Propagator of a constant field held for `duration`.
pub fn segment_propagator(rabi: f64, phase: f64, detuning: f64, duration: f64) -> Result<Propagator2> {
    ensure_finite("rabi", rabi)?;
    ensure_finite("phase", phase)?;
    ensure_finite("detuning", detuning)?;
    ensure_finite("duration", duration)?;
    if duration < 0.0 {
        return Err(Error::InvalidArgument(format!("duration must be >= 0, got {duration}")));
    }
    if rabi < 0.0 {
        return Err(Error::InvalidArgument(format!("rabi must be >= 0, got {rabi}")));
    }
    Ok(FieldVector::new(rabi, phase, detuning).propagator(duration))
}

/// Time-ordered product; `props[0]` acts first.
pub fn compose(props: &[Propagator2]) -> Result<Propagator2> {
    let (first, rest) = props
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("cannot compose an empty propagator list".into()))?;
    Ok(rest.iter().fold(*first, |acc, u| *u * acc))
}

/// Propagator of a whole waveform seen by an atom at `detuning` whose
/// coupling is `coupling_scale` times the programmed Rabi amplitude.
pub fn propagate_waveform(pulse: &PulseWaveform, detuning: f64, coupling_scale: f64) -> Result<Propagator2> {
    ensure_finite("detuning", detuning)?;
    ensure_finite("coupling_scale", coupling_scale)?;
    if coupling_scale < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "coupling_scale must be >= 0, got {coupling_scale}"
        )));
    }
    Ok(propagate_unchecked(pulse, detuning, coupling_scale))
}

/// Same as [`propagate_waveform`] for inputs already known to be valid.
pub(crate) fn propagate_unchecked(pulse: &PulseWaveform, detuning: f64, coupling_scale: f64) -> Propagator2 {
    pulse.segments().iter().fold(Propagator2::identity(), |acc, seg| {
        FieldVector::new(coupling_scale * seg.rabi, seg.phase, detuning).propagator(seg.duration) * acc
    })
}

/// `|<2|U|1>|²`: excited population reached from the ground state.
pub fn excited_population(u: &Propagator2) -> f64 {
    u.u21.norm_sqr()
}

/// Argument of `i<2|U|1>` (the phase of `S`), in `(-π, π]`.
pub fn s_phase(u: &Propagator2) -> Result<f64> {
    let magnitude = u.u21.norm();
    if magnitude < PHASE_THRESHOLD {
        return Err(Error::UndefinedPhase(magnitude));
    }
    let phase = u.s().arg();
    Ok(if phase <= -std::f64::consts::PI { std::f64::consts::PI } else { phase })
}

/// Bloch vector `(x, y, z)` with `z = |c1|² - |c2|²`.
pub fn bloch_vector(state: &TwoLevelState) -> [f64; 3] {
    let coherence = state.c1.conj() * state.c2;
    [
        2.0 * coherence.re,
        2.0 * coherence.im,
        state.c1.norm_sqr() - state.c2.norm_sqr(),
    ]
}

/// Unwraps a sequence of phases by nearest-branch continuation outward
/// from `seed`, which keeps its principal value.
pub fn unwrap_from(phases: &[f64], seed: usize) -> Vec<f64> {
    let mut out = phases.to_vec();
    if phases.is_empty() {
        return out;
    }
    let nearest = |reference: f64, raw: f64| {
        let tau = std::f64::consts::TAU;
        raw + tau * ((reference - raw) / tau).round()
    };
    for i in seed + 1..phases.len() {
        out[i] = nearest(out[i - 1], phases[i]);
    }
    for i in (0..seed).rev() {
        out[i] = nearest(out[i + 1], phases[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    const OMEGA: f64 = 2.0 * PI * 200e3;

    #[test]
    fn resonant_pi_is_x_rotation() {
        let u = segment_propagator(OMEGA, 0.0, 0.0, PI / OMEGA).unwrap();
        let expected = Propagator2 {
            u11: Complex64::new(0.0, 0.0),
            u12: Complex64::new(0.0, -1.0),
            u21: Complex64::new(0.0, -1.0),
            u22: Complex64::new(0.0, 0.0),
        };
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn free_evolution_is_diagonal() {
        let delta = 0.37 * OMEGA;
        let t = 3.1e-6;
        let u = segment_propagator(0.0, 1.234, delta, t).unwrap();
        let expected = Propagator2 {
            u11: Complex64::from_polar(1.0, -delta * t / 2.0),
            u12: Complex64::new(0.0, 0.0),
            u21: Complex64::new(0.0, 0.0),
            u22: Complex64::from_polar(1.0, delta * t / 2.0),
        };
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn detuned_pi_matches_generalized_rabi() {
        let u = segment_propagator(OMEGA, 0.0, OMEGA, PI / OMEGA).unwrap();
        let expected = 0.5 * (PI / 2f64.sqrt()).sin().powi(2);
        assert_abs_diff_eq!(excited_population(&u), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.3165, epsilon = 1e-4);
    }

    #[test]
    fn zero_field_is_exact_identity() {
        let u = segment_propagator(0.0, 0.3, 0.0, 1e-3).unwrap();
        assert_eq!(u, Propagator2::identity());
    }

    #[test]
    fn rejects_bad_segment_inputs() {
        assert!(matches!(segment_propagator(f64::NAN, 0.0, 0.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(segment_propagator(1.0, 0.0, f64::INFINITY, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(segment_propagator(1.0, 0.0, 0.0, -1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(segment_propagator(-1.0, 0.0, 0.0, 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn compose_orders_first_applied_first() {
        assert_eq!(compose(&[Propagator2::identity(), Propagator2::identity()]).unwrap(), Propagator2::identity());
        assert!(compose(&[]).is_err());

        let u = segment_propagator(OMEGA, 0.4, 0.3 * OMEGA, 1.7e-6).unwrap();
        let round_trip = compose(&[u, u.dagger()]).unwrap();
        assert!(round_trip.max_abs_diff(&Propagator2::identity()) < 1e-12);

        // x then y quarter turns do not commute; check the order explicitly.
        let x = segment_propagator(OMEGA, 0.0, 0.0, FRAC_PI_2 / OMEGA).unwrap();
        let y = segment_propagator(OMEGA, FRAC_PI_2, 0.0, FRAC_PI_2 / OMEGA).unwrap();
        assert!(compose(&[x, y]).unwrap().max_abs_diff(&(y * x)) < 1e-15);
    }

    #[test]
    fn waltz_elements_invert_at_resonance() {
        let t = |deg: f64| deg.to_radians() / OMEGA;
        let parts = [
            segment_propagator(OMEGA, 0.0, 0.0, t(90.0)).unwrap(),
            segment_propagator(OMEGA, PI, 0.0, t(180.0)).unwrap(),
            segment_propagator(OMEGA, 0.0, 0.0, t(270.0)).unwrap(),
        ];
        let u = compose(&parts).unwrap();
        assert_abs_diff_eq!(excited_population(&u), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn population_basics() {
        assert_eq!(excited_population(&Propagator2::identity()), 0.0);
        let half = segment_propagator(OMEGA, 0.0, 0.0, FRAC_PI_2 / OMEGA).unwrap();
        assert_abs_diff_eq!(excited_population(&half), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn s_phase_follows_laser_phase() {
        let u = segment_propagator(OMEGA, 0.0, 0.0, PI / OMEGA).unwrap();
        assert_abs_diff_eq!(s_phase(&u).unwrap(), 0.0, epsilon = 1e-15);
        // i<2|U|1> = S = e^{iπ/2}
        let u = segment_propagator(OMEGA, FRAC_PI_2, 0.0, PI / OMEGA).unwrap();
        assert_abs_diff_eq!(s_phase(&u).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        let u = segment_propagator(OMEGA, PI, 0.0, PI / OMEGA).unwrap();
        assert_abs_diff_eq!(s_phase(&u).unwrap(), PI, epsilon = 1e-15);
        assert!(matches!(s_phase(&Propagator2::identity()), Err(Error::UndefinedPhase(_))));
    }

    #[test]
    fn bloch_vectors_of_basis_states() {
        assert_eq!(bloch_vector(&TwoLevelState::ground()), [0.0, 0.0, 1.0]);
        assert_eq!(bloch_vector(&TwoLevelState::excited()), [0.0, 0.0, -1.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = TwoLevelState::new(Complex64::new(h, 0.0), Complex64::new(h, 0.0)).unwrap();
        let v = bloch_vector(&plus);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);
        assert!(TwoLevelState::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn unwrap_continues_from_seed() {
        let raw = [3.0, -3.1, 3.1, -3.0];
        let out = unwrap_from(&raw, 1);
        assert_eq!(out[1], -3.1);
        assert_abs_diff_eq!(out[0], 3.0 - 2.0 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 3.1 - 2.0 * PI, epsilon = 1e-15);
        assert_eq!(out[3], -3.0);
    }
}
