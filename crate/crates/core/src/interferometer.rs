//! Three-pulse Mach-Zehnder output, fringe decomposition and thermal contrast.
//!
//! With beamsplitter elements `C_b, S_b` and mirror elements `C_m, S_m`, the
//! excited population after π/2 – π – π/2 is
//!
//! ```text
//!     P₂ = (|S_b|⁴ + |C_b|⁴)|S_m|² + 2|S_b|²|C_m|²|C_b|² − 2 Re(e^{iφ_i} |C_b|² S_b² (S_m*)²)
//!        = ½ (A − B cos(φ_i + φ_p))
//!
//!     A   = 2(|S_b|⁴ + |C_b|⁴)|S_m|² + 4|S_b|²|C_m|²|C_b|²
//!     B   = 4|C_b|²|S_b|²|S_m|²
//!     φ_p = 2 arg S_b − 2 arg S_m
//! ```
//!
//! Paths that do not close at the output add incoherently, so the direct
//! evaluation tracks amplitudes per momentum kick rather than composing
//! the three propagators coherently.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{propagate_unchecked, Propagator2};
use crate::error::{Error, Result};
use crate::pulse::PulseWaveform;

/// kg
pub const RB85_MASS: f64 = 1.4100e-25;
/// J/K
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Counter-propagating 780 nm Raman beams, rad/m.
pub const RB85_K_EFF: f64 = 2.0 * TAU / 780e-9;
/// Converges to 1e-9 up to ~100 µK for 20 µs mirrors at 2π×200 kHz; lower
/// orders under-resolve the fringe phasor once the Doppler width spans
/// several Rabi frequencies.
pub const DEFAULT_QUADRATURE_ORDER: usize = 512;
pub const MIN_QUADRATURE_ORDER: usize = 8;
/// Samples of `φ_i` used by [`fringe_decomposition`].
pub const FRINGE_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct MachZehnderConfig {
    /// Used for both the first and the last pulse.
    pub beamsplitter: PulseWaveform,
    pub mirror: PulseWaveform,
    /// rad
    pub interferometric_phase: f64,
}

/// Mirror used in a sequence: a real waveform or an ideal inversion.
#[derive(Debug, Clone, PartialEq)]
pub enum Mirror {
    Pulse(PulseWaveform),
    /// `C = 0, S = 1` for every atom.
    PerfectPi,
}

impl Mirror {
    fn propagator(&self, detuning: f64, coupling_scale: f64) -> Propagator2 {
        match self {
            Mirror::Pulse(p) => propagate_unchecked(p, detuning, coupling_scale),
            Mirror::PerfectPi => Propagator2::from_cs(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
        }
    }
}

/// `P₂(φ_i) = ½(A − B cos(φ_i + φ_p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeDecomposition {
    /// `A`
    pub offset_a: f64,
    /// `B`
    pub contrast_b: f64,
    /// `φ_p`, rad in (−π, π]
    pub pulse_phase: f64,
    /// Largest deviation of the samples from the single-harmonic fringe.
    pub residual: f64,
}

impl FringeDecomposition {
    pub fn population(&self, interferometric_phase: f64) -> f64 {
        0.5 * (self.offset_a - self.contrast_b * (interferometric_phase + self.pulse_phase).cos())
    }
}

fn sequence_population(bs: &Propagator2, mirror: &Propagator2, phi_i: f64) -> f64 {
    let (cb, sb) = (bs.c(), bs.s());
    let (cm, sm) = (mirror.c(), mirror.s());
    let (cb2, sb2, cm2, sm2) = (cb.norm_sqr(), sb.norm_sqr(), cm.norm_sqr(), sm.norm_sqr());
    let cross = Complex64::from_polar(1.0, phi_i) * cb2 * sb * sb * sm.conj() * sm.conj();
    (sb2 * sb2 + cb2 * cb2) * sm2 + 2.0 * sb2 * cm2 * cb2 - 2.0 * cross.re
}

/// Output population from the closed-form `C`, `S` expression.
pub fn mz_population(config: &MachZehnderConfig, detuning: f64, coupling_scale: f64) -> f64 {
    let bs = propagate_unchecked(&config.beamsplitter, detuning, coupling_scale);
    let mirror = propagate_unchecked(&config.mirror, detuning, coupling_scale);
    sequence_population(&bs, &mirror, config.interferometric_phase)
}

/// Output population by propagating amplitudes through the sequence.
///
/// Index `d` counts the momentum kicks a path has received. Each pulse acts
/// within one `d`; during the dwell after a pulse the excited amplitude moves
/// to `d + 1`. `φ_i` enters as a laser phase of `−φ_i/2` on the mirror.
pub fn mz_population_direct(config: &MachZehnderConfig, detuning: f64, coupling_scale: f64) -> f64 {
    let bs = propagate_unchecked(&config.beamsplitter, detuning, coupling_scale);
    let mirror = propagate_unchecked(&config.mirror, detuning, coupling_scale)
        .phase_shifted(-0.5 * config.interferometric_phase);
    path_resolved_population(&bs, &mirror)
}

fn path_resolved_population(bs: &Propagator2, mirror: &Propagator2) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut paths = vec![(Complex64::new(1.0, 0.0), zero)];
    let pulse = |paths: &mut Vec<(Complex64, Complex64)>, u: &Propagator2| {
        for (c1, c2) in paths.iter_mut() {
            let (a, b) = (*c1, *c2);
            *c1 = u.u11 * a + u.u12 * b;
            *c2 = u.u21 * a + u.u22 * b;
        }
    };
    let dwell = |paths: &mut Vec<(Complex64, Complex64)>| {
        paths.push((zero, zero));
        for d in (1..paths.len()).rev() {
            paths[d].1 = paths[d - 1].1;
        }
        paths[0].1 = zero;
    };
    pulse(&mut paths, bs);
    dwell(&mut paths);
    pulse(&mut paths, mirror);
    dwell(&mut paths);
    pulse(&mut paths, bs);
    paths.iter().map(|(_, c2)| c2.norm_sqr()).sum()
}

/// `A`, `B`, `φ_p` evaluated from the closed-form expressions.
pub fn analytic_fringe(beamsplitter: &PulseWaveform, mirror: &Mirror, detuning: f64, coupling_scale: f64) -> FringeDecomposition {
    let bs = propagate_unchecked(beamsplitter, detuning, coupling_scale);
    let m = mirror.propagator(detuning, coupling_scale);
    let (cb2, sb2) = (bs.c().norm_sqr(), bs.s().norm_sqr());
    let (cm2, sm2) = (m.c().norm_sqr(), m.s().norm_sqr());
    let pulse_phase = Complex64::from_polar(1.0, 2.0 * bs.s().arg() - 2.0 * m.s().arg()).arg();
    FringeDecomposition {
        offset_a: 2.0 * (sb2 * sb2 + cb2 * cb2) * sm2 + 4.0 * sb2 * cm2 * cb2,
        contrast_b: 4.0 * cb2 * sb2 * sm2,
        pulse_phase: if pulse_phase == -PI { PI } else { pulse_phase },
        residual: 0.0,
    }
}

/// Offset, contrast and pulse phase from the first Fourier harmonic of
/// `P₂(φ_i)` sampled at [`FRINGE_SAMPLES`] points over `[0, 2π)`.
pub fn fringe_decomposition(
    beamsplitter: &PulseWaveform,
    mirror: &Mirror,
    detuning: f64,
    coupling_scale: f64,
) -> FringeDecomposition {
    let bs = propagate_unchecked(beamsplitter, detuning, coupling_scale);
    let m = mirror.propagator(detuning, coupling_scale);
    let n = FRINGE_SAMPLES;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let phi = TAU * k as f64 / n as f64;
            (phi, sequence_population(&bs, &m, phi))
        })
        .collect();
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / n as f64;
    let coefficient = samples
        .iter()
        .map(|&(phi, p)| p * Complex64::from_polar(1.0, -phi))
        .sum::<Complex64>()
        * (2.0 / n as f64);
    let mut fringe = FringeDecomposition {
        offset_a: 2.0 * mean,
        contrast_b: 2.0 * coefficient.norm(),
        pulse_phase: (-coefficient).arg(),
        residual: 0.0,
    };
    fringe.residual = samples
        .iter()
        .map(|&(phi, p)| (p - fringe.population(phi)).abs())
        .fold(0.0, f64::max);
    fringe
}

/// Maxwell-Boltzmann velocity spread along the Raman beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalModel {
    /// K
    pub temperature: f64,
    /// kg
    pub atom_mass: f64,
    /// rad/m
    pub effective_wavevector: f64,
    pub quadrature_order: usize,
}

impl ThermalModel {
    /// ⁸⁵Rb addressed by counter-propagating 780 nm beams.
    pub fn rb85(temperature: f64) -> Self {
        Self {
            temperature,
            atom_mass: RB85_MASS,
            effective_wavevector: RB85_K_EFF,
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
        }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quadrature_order < MIN_QUADRATURE_ORDER {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must be >= {MIN_QUADRATURE_ORDER}, got {}",
                self.quadrature_order
            )));
        }
        for (name, v) in [
            ("temperature", self.temperature),
            ("atom_mass", self.atom_mass),
            ("effective_wavevector", self.effective_wavevector),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Standard deviation of the Doppler detuning `k_eff v`, rad/s.
    pub fn detuning_std(&self) -> f64 {
        self.effective_wavevector * (BOLTZMANN * self.temperature / self.atom_mass).sqrt()
    }

    /// Full width at half maximum of the Doppler detuning distribution, rad/s.
    pub fn detuning_fwhm(&self) -> f64 {
        2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * self.detuning_std()
    }
}

/// `|⟨B e^{iφ_p}⟩|` over the thermal detuning distribution at unit coupling.
pub fn thermal_contrast(beamsplitter: &PulseWaveform, mirror: &Mirror, model: &ThermalModel) -> Result<f64> {
    model.validate()?;
    let rule = hermite_rule(model.quadrature_order)?;
    let sigma = model.detuning_std();
    let total: Complex64 = rule
        .iter()
        .map(|&(x, w)| w * fringe_phasor(beamsplitter, mirror, std::f64::consts::SQRT_2 * sigma * x))
        .sum();
    let contrast = (total / PI.sqrt()).norm();
    if !contrast.is_finite() {
        return Err(Error::Numerical(format!("thermal contrast is {contrast}")));
    }
    Ok(contrast)
}

/// Node/weight pairs for `∫ e^{-x²} f(x) dx`, built once per order since
/// construction is cubic in the order.
fn hermite_rule(order: usize) -> Result<Arc<Vec<(f64, f64)>>> {
    type Rules = HashMap<usize, Arc<Vec<(f64, f64)>>>;
    static RULES: OnceLock<Mutex<Rules>> = OnceLock::new();
    let mut rules = RULES.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if let Some(rule) = rules.get(&order) {
        return Ok(Arc::clone(rule));
    }
    let rule = GaussHermite::new(order)
        .map_err(|_| Error::InvalidArgument("quadrature order too small".into()))?;
    let rule = Arc::new(rule.as_node_weight_pairs().to_vec());
    rules.insert(order, Arc::clone(&rule));
    Ok(rule)
}

/// `B e^{iφ_p} = 4|C_b|² S_b² (S_m*)²` at one detuning.
pub fn fringe_phasor(beamsplitter: &PulseWaveform, mirror: &Mirror, detuning: f64) -> Complex64 {
    let bs = propagate_unchecked(beamsplitter, detuning, 1.0);
    let sm = mirror.propagator(detuning, 1.0).s();
    let sb = bs.s();
    4.0 * bs.c().norm_sqr() * sb * sb * sm.conj() * sm.conj()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastRow {
    pub mirror: String,
    /// K
    pub temperature: f64,
    pub contrast: f64,
}

/// Name of the ideal-inversion reference row in [`contrast_sweep`].
pub const PERFECT_PI_NAME: &str = "perfect_pi";

/// Contrast for every mirror at every temperature, followed by the ideal
/// inversion reference. Rows are ordered mirror-major in input order.
pub fn contrast_sweep(
    beamsplitter: &PulseWaveform,
    mirrors: &[(String, PulseWaveform)],
    temperatures: &[f64],
    model: &ThermalModel,
) -> Result<Vec<ContrastRow>> {
    if mirrors.is_empty() || temperatures.is_empty() {
        return Err(Error::InvalidArgument("mirror and temperature lists must be non-empty".into()));
    }
    let mut all: Vec<(String, Mirror)> = mirrors
        .iter()
        .map(|(name, p)| (name.clone(), Mirror::Pulse(p.clone())))
        .collect();
    all.push((PERFECT_PI_NAME.to_string(), Mirror::PerfectPi));
    let jobs: Vec<(usize, f64)> = (0..all.len())
        .flat_map(|m| temperatures.iter().map(move |&t| (m, t)))
        .collect();
    jobs.par_iter()
        .map(|&(m, t)| {
            let contrast = thermal_contrast(beamsplitter, &all[m].1, &model.with_temperature(t))?;
            Ok(ContrastRow {
                mirror: all[m].0.clone(),
                temperature: t,
                contrast,
            })
        })
        .collect()
}
