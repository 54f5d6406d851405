//! Robustness metrics, detuning response curves and detuning × coupling maps.
//!
//! All detunings in reports are expressed in units of the pulse's nominal
//! Rabi frequency Ω. Widths are the full extent of the contiguous interval
//! around δ = 0 on which the excited population exceeds a threshold.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{excited_population, propagate_unchecked, unwrap_from, Propagator2};
use crate::error::{Error, Result};
use crate::pulse::{composite, PulseWaveform, CATALOG};

/// Detuning step of the width scan, in units of Ω.
pub const WIDTH_SCAN_STEP: f64 = 1e-3;
/// Half range of the width scan, in units of Ω.
pub const WIDTH_SCAN_HALF_RANGE: f64 = 6.0;
/// Half range over which the phase variation is measured, in units of Ω.
pub const PHASE_HALF_RANGE: f64 = 1.0;
/// Below this `|S|` the phase of `S` is not trusted and is interpolated.
pub const SMALL_S: f64 = 1e-6;
/// Contour levels emitted with every population map.
pub const CONTOUR_LEVELS: [f64; 7] = [0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessReport {
    /// Width of the `P > 0.5` interval, in units of Ω.
    pub width_half: f64,
    /// Width of the `P > 0.9` interval, in units of Ω.
    pub width_ninety: f64,
    /// `max - min` of the unwrapped phase of `S` over `|δ| ≤ Ω`, rad.
    pub max_phase_variation: f64,
    pub length_t_pi: f64,
    /// Scan points inside `|δ| ≤ Ω` whose phase was interpolated.
    pub interpolated_phase_points: usize,
}

/// Robustness figures on the standard 0.001 Ω grid.
pub fn robustness_report(pulse: &PulseWaveform) -> Result<RobustnessReport> {
    robustness_report_with_step(pulse, WIDTH_SCAN_STEP)
}

/// Robustness figures with a custom detuning step (units of Ω).
pub fn robustness_report_with_step(pulse: &PulseWaveform, step: f64) -> Result<RobustnessReport> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidArgument(format!("scan step must be in (0, 0.1], got {step}")));
    }
    let omega = pulse.nominal_rabi();
    let n = (WIDTH_SCAN_HALF_RANGE / step).round() as i64;
    let props: Vec<Propagator2> = (-n..=n)
        .into_par_iter()
        .map(|i| propagate_unchecked(pulse, i as f64 * step * omega, 1.0))
        .collect();
    let populations: Vec<f64> = props.iter().map(excited_population).collect();
    let center = n as usize;

    let m = (PHASE_HALF_RANGE / step).round() as usize;
    let window = &props[center - m..=center + m];
    let (phases, flagged) = unwrapped_s_phase(window, m)?;
    let (lo, hi) = phases
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));

    Ok(RobustnessReport {
        width_half: threshold_width(&populations, center, step, 0.5),
        width_ninety: threshold_width(&populations, center, step, 0.9),
        max_phase_variation: hi - lo,
        length_t_pi: pulse.length_in_t_pi(),
        interpolated_phase_points: flagged.iter().filter(|&&f| f).count(),
    })
}

/// Full width (units of the grid coordinate) of the super-threshold run through
/// `values[center]`, with endpoints refined by quadratic interpolation.
fn threshold_width(values: &[f64], center: usize, step: f64, threshold: f64) -> f64 {
    if values[center] <= threshold {
        return 0.0;
    }
    let last = values.len() - 1;
    let mut r = center;
    while r < last && values[r + 1] > threshold {
        r += 1;
    }
    let mut l = center;
    while l > 0 && values[l - 1] > threshold {
        l -= 1;
    }
    let right = if r == last {
        r as f64
    } else {
        r as f64 + crossing(values, r, threshold)
    };
    let left = if l == 0 {
        0.0
    } else {
        // Mirror the sequence so the crossing again lies in (0, 1).
        let rev: Vec<f64> = values[l - 1..=(l + 1).min(last)].iter().rev().copied().collect();
        let k = rev.len() - 2;
        l as f64 - crossing(&rev, k, threshold)
    };
    (right - left) * step
}

/// Offset `t ∈ [0, 1]` past index `i` where the quadratic through three
/// neighbouring samples crosses `threshold`; `values[i] > threshold ≥ values[i+1]`.
fn crossing(values: &[f64], i: usize, threshold: f64) -> f64 {
    let (y0, y1) = (values[i], values[i + 1]);
    let linear = (y0 - threshold) / (y0 - y1);
    // Nodes at t = -1, 0, 1 or, at the left edge, 0, 1, 2.
    let (base, ys) = if i >= 1 {
        (-1.0, [values[i - 1], y0, y1])
    } else if i + 2 < values.len() {
        (0.0, [y0, y1, values[i + 2]])
    } else {
        return linear;
    };
    // Newton form through (base, base+1, base+2).
    let d1 = ys[1] - ys[0];
    let d2 = 0.5 * (ys[2] - 2.0 * ys[1] + ys[0]);
    // p(t) = ys0 + d1 (t - base) + d2 (t - base)(t - base - 1)
    let a = d2;
    let b = d1 - d2 * (2.0 * base + 1.0);
    let c = ys[0] - d1 * base + d2 * base * (base + 1.0) - threshold;
    if a.abs() < 1e-14 * (b.abs() + c.abs()) {
        return linear;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return linear;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + sq.copysign(b));
    [q / a, c / q]
        .into_iter()
        .filter(|t| t.is_finite() && (0.0..=1.0).contains(t))
        .min_by(|x, y| (x - linear).abs().total_cmp(&(y - linear).abs()))
        .unwrap_or(linear)
}

/// Unwrapped `arg S` seeded at `seed`. Points with `|S| < SMALL_S` are
/// interpolated linearly between trusted neighbours and flagged.
fn unwrapped_s_phase(props: &[Propagator2], seed: usize) -> Result<(Vec<f64>, Vec<bool>)> {
    let s: Vec<Complex64> = props.iter().map(Propagator2::s).collect();
    let flagged: Vec<bool> = s.iter().map(|z| z.norm() < SMALL_S).collect();
    let trusted: Vec<usize> = (0..s.len()).filter(|&i| !flagged[i]).collect();
    if trusted.is_empty() {
        let largest = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return Err(Error::UndefinedPhase(largest));
    }
    let raw: Vec<f64> = trusted.iter().map(|&i| s[i].arg()).collect();
    let seed_pos = trusted
        .iter()
        .enumerate()
        .min_by_key(|(_, &i)| i.abs_diff(seed))
        .map(|(k, _)| k)
        .expect("non-empty");
    let unwrapped = unwrap_from(&raw, seed_pos);

    let mut phases = vec![0.0; s.len()];
    for (&i, &p) in trusted.iter().zip(&unwrapped) {
        phases[i] = p;
    }
    for i in 0..s.len() {
        if !flagged[i] {
            continue;
        }
        let next = trusted.partition_point(|&t| t < i);
        phases[i] = match (next.checked_sub(1), trusted.get(next)) {
            (Some(p), Some(&hi)) => {
                let lo = trusted[p];
                let w = (i - lo) as f64 / (hi - lo) as f64;
                (1.0 - w) * phases[lo] + w * phases[hi]
            }
            (Some(p), None) => phases[trusted[p]],
            (None, Some(&hi)) => phases[hi],
            (None, None) => unreachable!("trusted is non-empty"),
        };
    }
    Ok((phases, flagged))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponsePoint {
    /// rad/s
    pub detuning: f64,
    pub population: f64,
    /// Unwrapped phase of `S`, seeded at the point nearest δ = 0.
    pub phase: f64,
    /// True when `|S| < SMALL_S` and the phase was interpolated.
    pub phase_interpolated: bool,
}

/// Population and phase on `n_points` evenly spaced detunings over
/// `[-half_range, half_range]` (rad/s) at nominal coupling.
pub fn response_curve(pulse: &PulseWaveform, half_range: f64, n_points: usize) -> Result<Vec<ResponsePoint>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {n_points}")));
    }
    if !(half_range.is_finite() && half_range > 0.0) {
        return Err(Error::InvalidArgument(format!("range must be positive, got {half_range}")));
    }
    let detunings = crate::ensemble::symmetric_linspace(n_points, half_range);
    let props: Vec<Propagator2> = detunings
        .par_iter()
        .map(|&d| propagate_unchecked(pulse, d, 1.0))
        .collect();
    let seed = (0..n_points)
        .min_by(|&a, &b| detunings[a].abs().total_cmp(&detunings[b].abs()))
        .expect("n_points >= 2");
    let (phases, flagged) = unwrapped_s_phase(&props, seed)?;
    Ok(detunings
        .iter()
        .zip(&props)
        .zip(phases.iter().zip(&flagged))
        .map(|((&detuning, u), (&phase, &phase_interpolated))| ResponsePoint {
            detuning,
            population: excited_population(u),
            phase,
            phase_interpolated,
        })
        .collect())
}

/// Excited population over a detuning × coupling-scale grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourGrid {
    /// rad/s
    pub detuning_axis: Vec<f64>,
    pub coupling_axis: Vec<f64>,
    /// `populations[j][i]` at `coupling_axis[j]`, `detuning_axis[i]`.
    pub populations: Vec<Vec<f64>>,
    pub levels: Vec<f64>,
}

impl ContourGrid {
    pub fn population(&self, detuning_index: usize, coupling_index: usize) -> f64 {
        self.populations[coupling_index][detuning_index]
    }

    /// Mask of grid points at or above `level`, same layout as `populations`.
    pub fn region_at_least(&self, level: f64) -> Vec<Vec<bool>> {
        self.populations
            .iter()
            .map(|row| row.iter().map(|&p| p >= level).collect())
            .collect()
    }
}

/// Population map over `δ ∈ [-detuning_half_range, detuning_half_range]` (rad/s)
/// and coupling scales `1 ± coupling_half_range`, `resolution` points per axis.
pub fn contour_grid(
    pulse: &PulseWaveform,
    detuning_half_range: f64,
    coupling_half_range: f64,
    resolution: usize,
) -> Result<ContourGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("resolution must be >= 2, got {resolution}")));
    }
    if !(detuning_half_range >= 0.0 && detuning_half_range.is_finite()) {
        return Err(Error::InvalidArgument("detuning range must be finite and >= 0".into()));
    }
    if !(0.0..1.0).contains(&coupling_half_range) {
        return Err(Error::InvalidArgument(format!(
            "coupling range must be in [0, 1), got {coupling_half_range}"
        )));
    }
    let detuning_axis = crate::ensemble::symmetric_linspace(resolution, detuning_half_range);
    let coupling_axis: Vec<f64> = crate::ensemble::symmetric_linspace(resolution, coupling_half_range)
        .into_iter()
        .map(|x| 1.0 + x)
        .collect();
    let populations = coupling_axis
        .par_iter()
        .map(|&scale| {
            detuning_axis
                .iter()
                .map(|&d| excited_population(&propagate_unchecked(pulse, d, scale)))
                .collect()
        })
        .collect();
    Ok(ContourGrid {
        detuning_axis,
        coupling_axis,
        populations,
        levels: CONTOUR_LEVELS.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub name: String,
    pub sequence: String,
    #[serde(flatten)]
    pub report: RobustnessReport,
}

/// Robustness rows for every catalog entry followed by the given pulses.
pub fn table_one_report(extra: &[(String, PulseWaveform)]) -> Result<Vec<TableRow>> {
    let rabi = std::f64::consts::TAU * 200e3;
    let mut rows = Vec::with_capacity(CATALOG.len() + extra.len());
    for entry in CATALOG {
        rows.push(TableRow {
            name: entry.name.to_string(),
            sequence: entry.notation(),
            report: robustness_report(&composite(entry.name, rabi)?)?,
        });
    }
    for (name, pulse) in extra {
        rows.push(TableRow {
            name: name.clone(),
            sequence: format!("{} slices", pulse.len()),
            report: robustness_report(pulse)?,
        });
    }
    Ok(rows)
}

/// Fixed-width text rendering of [`table_one_report`] rows.
pub fn format_table(rows: &[TableRow]) -> String {
    let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let seq_w = rows.iter().map(|r| r.sequence.chars().count()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:<seq_w$}  {:>7}  {:>7}  {:>7}  {:>9}",
        "name", "sequence", "length", ">0.5", ">0.9", "max dphi"
    );
    for r in rows {
        let pad = seq_w - r.sequence.chars().count();
        let _ = writeln!(
            out,
            "{:<name_w$}  {}{}  {:>7.3}  {:>7.3}  {:>7.3}  {:>9.3}",
            r.name,
            r.sequence,
            " ".repeat(pad),
            r.report.length_t_pi,
            r.report.width_half,
            r.report.width_ninety,
            r.report.max_phase_variation
        );
    }
    out
}
