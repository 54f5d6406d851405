//! Piecewise-constant pulses and the catalog of composite mirror sequences.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One constant-field slice: hold `rabi` (rad/s) at laser `phase` (rad) for `duration` (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSegment {
    pub duration: f64,
    pub rabi: f64,
    pub phase: f64,
}

impl PulseSegment {
    fn validate(&self, index: usize) -> Result<()> {
        if !(self.duration.is_finite() && self.rabi.is_finite() && self.phase.is_finite()) {
            return Err(Error::Validation(format!("segment {index} has a non-finite field")));
        }
        if self.duration <= 0.0 {
            return Err(Error::Validation(format!(
                "segment {index} duration must be > 0, got {}",
                self.duration
            )));
        }
        if self.rabi < 0.0 {
            return Err(Error::Validation(format!(
                "segment {index} rabi must be >= 0, got {}",
                self.rabi
            )));
        }
        Ok(())
    }
}

/// An ordered, non-empty list of segments plus the Rabi frequency the pulse
/// was designed for. `nominal_rabi` sets the unit for robustness axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseWaveform {
    segments: Vec<PulseSegment>,
    nominal_rabi: f64,
}

impl PulseWaveform {
    pub fn new(segments: Vec<PulseSegment>, nominal_rabi: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Validation("pulse has no segments".into()));
        }
        if !(nominal_rabi.is_finite() && nominal_rabi > 0.0) {
            return Err(Error::Validation(format!(
                "nominal rabi must be finite and > 0, got {nominal_rabi}"
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            seg.validate(i)?;
        }
        Ok(Self { segments, nominal_rabi })
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn nominal_rabi(&self) -> f64 {
        self.nominal_rabi
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Duration of a rectangular π pulse at the nominal Rabi frequency.
    pub fn t_pi(&self) -> f64 {
        PI / self.nominal_rabi
    }

    /// Total duration in units of `t_π`.
    pub fn length_in_t_pi(&self) -> f64 {
        self.total_duration() / self.t_pi()
    }

    /// Flat pulse of constant amplitude and phase sampled at `timestep`.
    pub fn flat(nominal_rabi: f64, duration: f64, timestep: f64, phase: f64) -> Result<Self> {
        let single = Self::new(
            vec![PulseSegment {
                duration,
                rabi: nominal_rabi,
                phase,
            }],
            nominal_rabi,
        )?;
        discretize(&single, timestep)
    }

    /// Constant-amplitude pulse with phases drawn uniformly from `[-π, π)`,
    /// reproducible for a given `seed`.
    pub fn random_phase(nominal_rabi: f64, duration: f64, timestep: f64, seed: u64) -> Result<Self> {
        let mut pulse = Self::flat(nominal_rabi, duration, timestep, 0.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for seg in &mut pulse.segments {
            seg.phase = rng.gen_range(-PI..PI);
        }
        Ok(pulse)
    }

    /// Same pulse with every phase replaced, keeping durations and amplitudes.
    pub fn with_phases(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.segments.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} phases, got {}",
                self.segments.len(),
                phases.len()
            )));
        }
        let segments = self
            .segments
            .iter()
            .zip(phases)
            .map(|(s, &phase)| PulseSegment { phase, ..*s })
            .collect();
        Self::new(segments, self.nominal_rabi)
    }

    /// Adds `offset` to every segment phase.
    pub fn phase_offset(&self, offset: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| PulseSegment {
                phase: s.phase + offset,
                ..*s
            })
            .collect();
        Self {
            segments,
            nominal_rabi: self.nominal_rabi,
        }
    }

    /// The same pulse in dimensionless terms, played at a different nominal
    /// Rabi frequency: amplitudes scale by `r = new/old`, durations by `1/r`.
    pub fn rescaled_to(&self, nominal_rabi: f64) -> Result<Self> {
        if !(nominal_rabi.is_finite() && nominal_rabi > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "nominal rabi must be finite and > 0, got {nominal_rabi}"
            )));
        }
        let ratio = nominal_rabi / self.nominal_rabi;
        let segments = self
            .segments
            .iter()
            .map(|s| PulseSegment {
                duration: s.duration / ratio,
                rabi: s.rabi * ratio,
                phase: s.phase,
            })
            .collect();
        Self::new(segments, nominal_rabi)
    }

    /// Common slice duration if all segments are equally long (relative tolerance 1e-9).
    pub fn uniform_timestep(&self) -> Option<f64> {
        let first = self.segments[0].duration;
        self.segments
            .iter()
            .all(|s| (s.duration - first).abs() <= 1e-9 * first)
            .then_some(first)
    }
}

/// Rectangular pulse rotating by `angle` about the axis at `phase`.
pub fn rectangular(angle: f64, phase: f64, rabi: f64) -> Result<PulseWaveform> {
    if !(angle.is_finite() && angle > 0.0) {
        return Err(Error::InvalidArgument(format!("angle must be > 0, got {angle}")));
    }
    if !(rabi.is_finite() && rabi > 0.0) {
        return Err(Error::InvalidArgument(format!("rabi must be > 0, got {rabi}")));
    }
    if !phase.is_finite() {
        return Err(Error::InvalidArgument("phase must be finite".into()));
    }
    PulseWaveform::new(
        vec![PulseSegment {
            duration: angle / rabi,
            rabi,
            phase,
        }],
        rabi,
    )
}

/// Sequence of rotation elements `θ_φ`, angles and phases in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpec {
    pub elements: Vec<(f64, f64)>,
}

impl CompositeSpec {
    /// Builds a spec from `(angle°, phase°)` pairs.
    pub fn from_degrees(elements: &[(f64, f64)]) -> Result<Self> {
        let elements: Vec<_> = elements
            .iter()
            .map(|&(a, p)| (a.to_radians(), p.to_radians()))
            .collect();
        if elements.is_empty() || elements.iter().any(|&(a, _)| !(a > 0.0)) {
            return Err(Error::InvalidArgument("composite angles must be > 0".into()));
        }
        Ok(Self { elements })
    }

    /// Plays every element at amplitude `rabi` with duration `angle / rabi`.
    pub fn to_waveform(&self, rabi: f64) -> Result<PulseWaveform> {
        if !(rabi.is_finite() && rabi > 0.0) {
            return Err(Error::InvalidArgument(format!("rabi must be > 0, got {rabi}")));
        }
        let segments = self
            .elements
            .iter()
            .map(|&(angle, phase)| PulseSegment {
                duration: angle / rabi,
                rabi,
                phase,
            })
            .collect();
        PulseWaveform::new(segments, rabi)
    }

    /// Sum of rotation angles in units of π.
    pub fn length_in_t_pi(&self) -> f64 {
        self.elements.iter().map(|&(a, _)| a).sum::<f64>() / PI
    }
}

/// A named composite mirror sequence, transcribed in degrees.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// `(angle°, phase°)` per element.
    pub elements: &'static [(f64, f64)],
    /// Total length in `t_π` as a ratio `(num, den)`.
    pub length: (u32, u32),
    pub note: &'static str,
}

impl CatalogEntry {
    pub fn spec(&self) -> CompositeSpec {
        CompositeSpec::from_degrees(self.elements).expect("catalog angles are positive")
    }

    /// Human-readable `θ_φ` sequence, e.g. `90_0 180_180 270_0`.
    pub fn notation(&self) -> String {
        self.elements
            .iter()
            .map(|(a, p)| format!("{a}_{p}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "rectangular",
        elements: &[(180.0, 0.0)],
        length: (1, 1),
        note: "single constant-phase pi rotation",
    },
    CatalogEntry {
        name: "levitt",
        elements: &[(90.0, 90.0), (180.0, 0.0), (90.0, 90.0)],
        length: (2, 1),
        note: "",
    },
    CatalogEntry {
        name: "waltz",
        elements: &[(90.0, 0.0), (180.0, 180.0), (270.0, 0.0)],
        length: (3, 1),
        note: "point-to-point inversion",
    },
    CatalogEntry {
        name: "knill",
        elements: &[(180.0, 240.0), (180.0, 210.0), (180.0, 300.0), (180.0, 210.0), (180.0, 240.0)],
        length: (5, 1),
        note: "universal 180 degree rotation",
    },
    CatalogEntry {
        name: "corpse",
        elements: &[(60.0, 0.0), (300.0, 180.0), (420.0, 0.0)],
        length: (13, 3),
        note: "",
    },
    CatalogEntry {
        name: "scrofulous",
        elements: &[(180.0, 60.0), (180.0, 300.0), (180.0, 60.0)],
        length: (3, 1),
        note: "",
    },
    CatalogEntry {
        name: "bb1",
        elements: &[(180.0, 104.5), (360.0, 313.4), (180.0, 104.5), (180.0, 0.0)],
        length: (5, 1),
        note: "the 360 degree element counts as two t_pi",
    },
];

pub fn catalog_entry(name: &str) -> Result<&'static CatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let known: Vec<_> = CATALOG.iter().map(|e| e.name).collect();
            Error::NotFound(format!("no composite pulse named {name:?}; known: {}", known.join(", ")))
        })
}

/// Catalog pulse played at amplitude `rabi`.
pub fn composite(name: &str, rabi: f64) -> Result<PulseWaveform> {
    catalog_entry(name)?.spec().to_waveform(rabi)
}

/// Splits every segment into equal slices no longer than `timestep`.
pub fn discretize(pulse: &PulseWaveform, timestep: f64) -> Result<PulseWaveform> {
    if !(timestep.is_finite() && timestep > 0.0) {
        return Err(Error::InvalidArgument(format!("timestep must be > 0, got {timestep}")));
    }
    let mut segments = Vec::new();
    for seg in pulse.segments() {
        // Absorb rounding so that an exact multiple does not gain a sliver slice.
        let count = ((seg.duration / timestep) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let slice = seg.duration / count as f64;
        segments.extend(std::iter::repeat_n(
            PulseSegment {
                duration: slice,
                ..*seg
            },
            count,
        ));
    }
    PulseWaveform::new(segments, pulse.nominal_rabi())
}
