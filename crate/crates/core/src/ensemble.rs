//! Inhomogeneity ensembles and the mirror fidelity functionals.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::propagate_unchecked;
use crate::error::{Error, Result};
use crate::pulse::PulseWaveform;

/// One atom class: extra detuning and a multiplicative error on the coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleMember {
    /// rad/s
    pub detuning_offset: f64,
    /// `1 + Ω_off / Ω_eff`
    pub coupling_scale: f64,
    pub weight: f64,
}

/// Weighted set of members whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<EnsembleMember>,
}

impl Ensemble {
    pub const WEIGHT_TOLERANCE: f64 = 1e-12;

    /// Validates members; weights must already sum to one.
    pub fn new(members: Vec<EnsembleMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("ensemble has no members".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if !(m.detuning_offset.is_finite() && m.coupling_scale.is_finite() && m.weight.is_finite()) {
                return Err(Error::Validation(format!("member {i} has a non-finite field")));
            }
            if m.coupling_scale <= 0.0 {
                return Err(Error::Validation(format!(
                    "member {i} coupling scale must be > 0, got {}",
                    m.coupling_scale
                )));
            }
            if m.weight < 0.0 {
                return Err(Error::Validation(format!("member {i} has negative weight {}", m.weight)));
            }
        }
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > Self::WEIGHT_TOLERANCE {
            return Err(Error::Validation(format!("ensemble weights sum to {total}, expected 1")));
        }
        Ok(Self { members })
    }

    /// Rescales the weights to sum to one, then validates.
    pub fn normalized(mut members: Vec<EnsembleMember>) -> Result<Self> {
        let total: f64 = members.iter().map(|m| m.weight).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Validation(format!("ensemble weights sum to {total}")));
        }
        for m in &mut members {
            m.weight /= total;
        }
        Self::new(members)
    }

    /// A single resonant member with nominal coupling.
    pub fn resonant() -> Self {
        Self {
            members: vec![EnsembleMember {
                detuning_offset: 0.0,
                coupling_scale: 1.0,
                weight: 1.0,
            }],
        }
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Grid generator parameters. Ranges are in units of the nominal Rabi
/// frequency (detuning) and as a fraction (coupling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleGrid {
    pub n_detuning: usize,
    pub detuning_range: f64,
    pub n_coupling: usize,
    pub coupling_range: f64,
    pub near_resonance_extra: usize,
    /// Half-width of the extra near-resonance detunings, in units of Ω_eff.
    pub near_resonance_span: f64,
}

impl EnsembleGrid {
    pub const DEFAULT_NEAR_RESONANCE_SPAN: f64 = 0.1;

    pub fn new(
        n_detuning: usize,
        detuning_range: f64,
        n_coupling: usize,
        coupling_range: f64,
        near_resonance_extra: usize,
    ) -> Self {
        Self {
            n_detuning,
            detuning_range,
            n_coupling,
            coupling_range,
            near_resonance_extra,
            near_resonance_span: Self::DEFAULT_NEAR_RESONANCE_SPAN,
        }
    }

    /// 20 detunings over ±1.5 Ω_eff, 5 couplings over ±10 %, 8 extras near resonance.
    pub fn mirror_design() -> Self {
        Self::new(20, 1.5, 5, 0.1, 8)
    }
}

/// `n` evenly spaced points over `[-half, half]`; a single point sits at 0.
pub fn symmetric_linspace(n: usize, half: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Detuning × coupling grid plus extra resonant-coupling points near δ = 0,
/// every member weighted equally.
pub fn build_ensemble(grid: &EnsembleGrid, nominal_rabi: f64) -> Result<Ensemble> {
    if grid.n_detuning == 0 || grid.n_coupling == 0 {
        return Err(Error::InvalidArgument("ensemble grid counts must be >= 1".into()));
    }
    for (name, v) in [
        ("detuning_range", grid.detuning_range),
        ("coupling_range", grid.coupling_range),
        ("near_resonance_span", grid.near_resonance_span),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if grid.coupling_range >= 1.0 {
        return Err(Error::InvalidArgument("coupling_range must be < 1".into()));
    }
    if !(nominal_rabi.is_finite() && nominal_rabi > 0.0) {
        return Err(Error::InvalidArgument(format!("nominal rabi must be > 0, got {nominal_rabi}")));
    }
    let detunings = symmetric_linspace(grid.n_detuning, grid.detuning_range * nominal_rabi);
    let scales = symmetric_linspace(grid.n_coupling, grid.coupling_range);
    let extras = symmetric_linspace(grid.near_resonance_extra, grid.near_resonance_span * nominal_rabi);

    let mut members = Vec::with_capacity(detunings.len() * scales.len() + extras.len());
    for &d in &detunings {
        for &s in &scales {
            members.push((d, 1.0 + s));
        }
    }
    members.extend(extras.iter().map(|&d| (d, 1.0)));
    let weight = 1.0 / members.len() as f64;
    Ensemble::normalized(
        members
            .into_iter()
            .map(|(detuning_offset, coupling_scale)| EnsembleMember {
                detuning_offset,
                coupling_scale,
                weight,
            })
            .collect(),
    )
}

/// Which function of `<2|U|1>` is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FidelityKind {
    /// `Re<2|U|1>`: fixes the phase of the overlap.
    RealOverlap,
    /// `Im<2|U|1>`
    ImagOverlap,
    /// `|<2|U|1>|²`: population only, phase free.
    SquareOverlap,
}

impl FidelityKind {
    pub const ALL: [FidelityKind; 3] = [Self::RealOverlap, Self::ImagOverlap, Self::SquareOverlap];

    /// Value of the functional for overlap `z`.
    pub fn evaluate(self, z: Complex64) -> f64 {
        match self {
            Self::RealOverlap => z.re,
            Self::ImagOverlap => z.im,
            Self::SquareOverlap => z.norm_sqr(),
        }
    }

    /// Real derivative of the functional along the overlap change `dz`.
    pub fn differential(self, z: Complex64, dz: Complex64) -> f64 {
        match self {
            Self::RealOverlap => dz.re,
            Self::ImagOverlap => dz.im,
            Self::SquareOverlap => 2.0 * (z.conj() * dz).re,
        }
    }
}

impl fmt::Display for FidelityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RealOverlap => "real",
            Self::ImagOverlap => "imag",
            Self::SquareOverlap => "square",
        })
    }
}

impl serde::Serialize for FidelityKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for FidelityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Self::RealOverlap),
            "imag" => Ok(Self::ImagOverlap),
            "square" => Ok(Self::SquareOverlap),
            other => Err(Error::InvalidArgument(format!(
                "unknown fidelity {other:?}; expected real, imag or square"
            ))),
        }
    }
}

/// Overlap `<2|U|1>` seen by one member.
pub fn member_overlap(pulse: &PulseWaveform, member: &EnsembleMember) -> Complex64 {
    propagate_unchecked(pulse, member.detuning_offset, member.coupling_scale).u21
}

pub fn member_fidelity(pulse: &PulseWaveform, member: &EnsembleMember, kind: FidelityKind) -> f64 {
    kind.evaluate(member_overlap(pulse, member))
}

/// Weighted mean of member fidelities. Members are evaluated in parallel and
/// reduced in member order, so the result is bit-reproducible.
pub fn ensemble_fidelity(pulse: &PulseWaveform, ensemble: &Ensemble, kind: FidelityKind) -> f64 {
    let values: Vec<f64> = ensemble
        .members()
        .par_iter()
        .map(|m| m.weight * member_fidelity(pulse, m, kind))
        .collect();
    values.iter().sum()
}
