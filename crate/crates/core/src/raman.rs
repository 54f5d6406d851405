//! Counter-propagating σ⁺–σ⁺ Raman inversion over Zeeman sublevels and a
//! momentum distribution.
//!
//! An atom in sublevel `m_F` with Doppler detuning `δ_D` sees, for laser
//! detuning `δ_L`,
//!
//! ```text
//!     δ = δ_L − s(m_F) + δ_D        Ω = f(m_F) Ω_eff
//! ```
//!
//! where `s` is the light shift of the two-photon resonance and `f` the
//! relative coupling of that sublevel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{excited_population, propagate_unchecked};
use crate::ensemble::{symmetric_linspace, EnsembleMember};
use crate::error::{Error, Result};
use crate::pulse::PulseWaveform;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sublevel {
    pub m_f: i32,
    /// Multiplier on the effective Rabi frequency.
    pub coupling_factor: f64,
    /// rad/s
    pub stark_shift: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SublevelSet {
    levels: Vec<Sublevel>,
}

/// Coupling spread per unit `m_F` in the default profile.
pub const DEFAULT_COUPLING_SLOPE: f64 = 0.15;
/// Light shift common to all sublevels in the default profile, units of Ω_eff.
pub const DEFAULT_STARK_OFFSET: f64 = 0.2;
/// Light shift per unit `m_F` in the default profile, units of Ω_eff.
pub const DEFAULT_STARK_SLOPE: f64 = 0.3;

impl SublevelSet {
    /// Requires 1 to 5 levels with distinct `m_F ∈ [−2, 2]`, positive coupling
    /// factors and non-negative weights summing to one.
    pub fn new(levels: Vec<Sublevel>) -> Result<Self> {
        if levels.is_empty() || levels.len() > 5 {
            return Err(Error::Validation(format!("expected 1 to 5 sublevels, got {}", levels.len())));
        }
        for (i, l) in levels.iter().enumerate() {
            if !(-2..=2).contains(&l.m_f) {
                return Err(Error::Validation(format!("m_f {} outside [-2, 2]", l.m_f)));
            }
            if levels[..i].iter().any(|o| o.m_f == l.m_f) {
                return Err(Error::Validation(format!("duplicate m_f {}", l.m_f)));
            }
            if !(l.coupling_factor.is_finite() && l.coupling_factor > 0.0) {
                return Err(Error::Validation(format!("coupling_factor must be > 0 for m_f {}", l.m_f)));
            }
            if !l.stark_shift.is_finite() || !(l.weight.is_finite() && l.weight >= 0.0) {
                return Err(Error::Validation(format!("invalid stark shift or weight for m_f {}", l.m_f)));
            }
        }
        let total: f64 = levels.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Validation(format!("sublevel weights sum to {total}, expected 1")));
        }
        Ok(Self { levels })
    }

    /// Five equally populated levels with couplings `1 + 0.15 m_F` and light
    /// shifts `(0.2 + 0.3 m_F) Ω_eff`.
    ///
    /// Representative of a σ⁺–σ⁺ arrangement: the coupling spans ±0.3 Ω_eff
    /// and the resonance moves with the sublevel's coupling.
    pub fn default_profile(nominal_rabi: f64) -> Self {
        let levels = (-2..=2)
            .map(|m_f| Sublevel {
                m_f,
                coupling_factor: 1.0 + DEFAULT_COUPLING_SLOPE * m_f as f64,
                stark_shift: (DEFAULT_STARK_OFFSET + DEFAULT_STARK_SLOPE * m_f as f64) * nominal_rabi,
                weight: 0.2,
            })
            .collect();
        Self { levels }
    }

    /// One unshifted level at nominal coupling.
    pub fn single() -> Self {
        Self {
            levels: vec![Sublevel {
                m_f: 0,
                coupling_factor: 1.0,
                stark_shift: 0.0,
                weight: 1.0,
            }],
        }
    }

    pub fn levels(&self) -> &[Sublevel] {
        &self.levels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumSample {
    /// Doppler detuning `k_eff v`, rad/s.
    pub detuning: f64,
    pub weight: f64,
}

/// Checks that `samples` is non-empty with non-negative weights summing to one.
pub fn validate_momentum(samples: &[MomentumSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Validation("momentum distribution is empty".into()));
    }
    if samples
        .iter()
        .any(|s| !s.detuning.is_finite() || !(s.weight.is_finite() && s.weight >= 0.0))
    {
        return Err(Error::Validation("momentum samples need finite detunings and weights >= 0".into()));
    }
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::Validation(format!("momentum weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Rescales weights to sum to one.
pub fn normalize_momentum(mut samples: Vec<MomentumSample>) -> Result<Vec<MomentumSample>> {
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Validation(format!("momentum weights sum to {total}")));
    }
    samples.iter_mut().for_each(|s| s.weight /= total);
    validate_momentum(&samples)?;
    Ok(samples)
}

/// Gaussian in Doppler detuning with the given FWHM (rad/s), sampled at 101
/// points over ±3 FWHM with trapezoidal weights.
pub fn gaussian_momentum(fwhm: f64) -> Result<Vec<MomentumSample>> {
    if !(fwhm.is_finite() && fwhm > 0.0) {
        return Err(Error::InvalidArgument(format!("FWHM must be positive, got {fwhm}")));
    }
    let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let grid = symmetric_linspace(101, 3.0 * fwhm);
    let last = grid.len() - 1;
    let samples = grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let end = if i == 0 || i == last { 0.5 } else { 1.0 };
            MomentumSample {
                detuning: d,
                weight: end * (-0.5 * (d / sigma).powi(2)).exp(),
            }
        })
        .collect();
    normalize_momentum(samples)
}

/// All atoms at rest.
pub fn delta_momentum() -> Vec<MomentumSample> {
    vec![MomentumSample { detuning: 0.0, weight: 1.0 }]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamanScanConfig {
    /// `δ_L` values, rad/s.
    pub laser_detuning_grid: Vec<f64>,
    pub sublevels: SublevelSet,
    pub momentum: Vec<MomentumSample>,
    /// Effective Rabi frequency the pulse is played at, rad/s.
    pub nominal_rabi: f64,
}

impl RamanScanConfig {
    /// Default profile and a Gaussian of FWHM 1.5 Ω_eff, scanned over ±2 Ω_eff
    /// in steps of 0.01 Ω_eff.
    pub fn standard(nominal_rabi: f64) -> Result<Self> {
        Ok(Self {
            laser_detuning_grid: symmetric_linspace(401, 2.0 * nominal_rabi),
            sublevels: SublevelSet::default_profile(nominal_rabi),
            momentum: gaussian_momentum(1.5 * nominal_rabi)?,
            nominal_rabi,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.laser_detuning_grid.is_empty() {
            return Err(Error::InvalidArgument("laser detuning grid is empty".into()));
        }
        if self.laser_detuning_grid.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("laser detunings must be finite".into()));
        }
        if !(self.nominal_rabi.is_finite() && self.nominal_rabi > 0.0) {
            return Err(Error::InvalidArgument("nominal Rabi frequency must be positive".into()));
        }
        validate_momentum(&self.momentum)
    }
}

/// Ensemble member for one sublevel and momentum class at laser detuning `δ_L`.
pub fn sublevel_member(level: &Sublevel, laser_detuning: f64, sample: &MomentumSample) -> EnsembleMember {
    EnsembleMember {
        detuning_offset: laser_detuning - level.stark_shift + sample.detuning,
        coupling_scale: level.coupling_factor,
        weight: level.weight * sample.weight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    /// rad/s
    pub laser_detuning: f64,
    pub population: f64,
}

/// Sublevel- and momentum-averaged excited population at every `δ_L`.
///
/// A pulse designed at a different nominal Rabi frequency is first played
/// at `config.nominal_rabi` with the same rotation angles.
pub fn raman_scan(pulse: &PulseWaveform, config: &RamanScanConfig) -> Result<Vec<ScanPoint>> {
    config.validate()?;
    let played = if pulse.nominal_rabi() == config.nominal_rabi {
        pulse.clone()
    } else {
        pulse.rescaled_to(config.nominal_rabi)?
    };
    Ok(config
        .laser_detuning_grid
        .par_iter()
        .map(|&laser_detuning| {
            let mut population = 0.0;
            for level in config.sublevels.levels() {
                for sample in &config.momentum {
                    let m = sublevel_member(level, laser_detuning, sample);
                    population += m.weight * excited_population(&propagate_unchecked(&played, m.detuning_offset, m.coupling_scale));
                }
            }
            ScanPoint { laser_detuning, population }
        })
        .collect())
}

/// Largest population with 3-point parabolic refinement on uniform grids.
/// Ties resolve to the smallest detuning.
pub fn peak_population(curve: &[ScanPoint]) -> Result<ScanPoint> {
    let best = curve
        .iter()
        .enumerate()
        .reduce(|a, b| {
            let better = b.1.population > a.1.population
                || (b.1.population == a.1.population && b.1.laser_detuning < a.1.laser_detuning);
            if better {
                b
            } else {
                a
            }
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidArgument("empty curve".into()))?;
    let peak = curve[best];
    if best == 0 || best + 1 == curve.len() {
        return Ok(peak);
    }
    let (l, r) = (curve[best - 1], curve[best + 1]);
    let h = peak.laser_detuning - l.laser_detuning;
    if !(h > 0.0) || ((r.laser_detuning - peak.laser_detuning) - h).abs() > 1e-9 * h.abs() {
        return Ok(peak);
    }
    let curvature = l.population - 2.0 * peak.population + r.population;
    if !(curvature < 0.0) {
        return Ok(peak);
    }
    let t = 0.5 * (l.population - r.population) / curvature;
    let value = peak.population - 0.25 * (l.population - r.population) * t;
    Ok(ScanPoint {
        laser_detuning: peak.laser_detuning + t * h,
        population: value.clamp(peak.population, 1.0),
    })
}
