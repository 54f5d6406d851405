use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::gradient::{apply_controls, controls, fidelity_and_gradient, ControlParameterization};
use super::lbfgs::{minimize, LbfgsSettings, Termination};
use super::penalty::penalty;
use crate::ensemble::{ensemble_fidelity, Ensemble, FidelityKind};
use crate::error::{Error, Result};
use crate::pulse::{PulseSegment, PulseWaveform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationConfig {
    pub parameterization: ControlParameterization,
    pub max_iterations: usize,
    /// Infinity-norm threshold on the objective gradient. Phase controls are
    /// in radians, Cartesian controls in units of the nominal Rabi frequency.
    pub gradient_tolerance: f64,
    pub lbfgs_memory: usize,
    /// rad/s
    pub amplitude_cap: f64,
    pub penalty_amplitude_weight: f64,
    pub penalty_smoothness_weight: f64,
    /// s
    pub timestep: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            parameterization: ControlParameterization::PhaseOnly,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            lbfgs_memory: 10,
            amplitude_cap: f64::INFINITY,
            penalty_amplitude_weight: 0.0,
            penalty_smoothness_weight: 0.0,
            timestep: 100e-9,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.lbfgs_memory == 0 {
            return Err(Error::Validation("max_iterations and lbfgs_memory must be positive".into()));
        }
        if !(self.gradient_tolerance >= 0.0) {
            return Err(Error::Validation("gradient_tolerance must be >= 0".into()));
        }
        if !(self.penalty_amplitude_weight >= 0.0 && self.penalty_smoothness_weight >= 0.0) {
            return Err(Error::Validation("penalty weights must be >= 0".into()));
        }
        if !(self.amplitude_cap > 0.0) {
            return Err(Error::Validation("amplitude_cap must be > 0".into()));
        }
        if !(self.timestep.is_finite() && self.timestep > 0.0) {
            return Err(Error::Validation("timestep must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: PulseWaveform,
    /// Ensemble fidelity at the start and after every accepted iteration.
    pub fidelity_trace: Vec<f64>,
    /// Fidelity minus penalty at the same points; never decreases.
    pub objective_trace: Vec<f64>,
    pub final_gradient_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl OptimizationResult {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity_trace.last().expect("trace holds the starting point")
    }
}

/// Machine-readable summary written next to an optimized pulse.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub fidelity: FidelityKind,
    pub parameterization: ControlParameterization,
    pub iterations: usize,
    pub termination: Termination,
    pub final_fidelity: f64,
    pub final_gradient_norm: f64,
    pub fidelity_trace: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(result: &OptimizationResult, kind: FidelityKind, config: &OptimizationConfig, wall_time_s: f64) -> Self {
        Self {
            fidelity: kind,
            parameterization: config.parameterization,
            iterations: result.iterations,
            termination: result.termination,
            final_fidelity: result.final_fidelity(),
            final_gradient_norm: result.final_gradient_norm,
            fidelity_trace: result.fidelity_trace.clone(),
            objective_trace: result.objective_trace.clone(),
            wall_time_s,
        }
    }
}

/// Maximizes `ensemble_fidelity - penalty` over the pulse controls with L-BFGS.
///
/// `initial` must already be sliced at `config.timestep`. In phase-only mode
/// every slice amplitude is pinned to the pulse's nominal Rabi frequency.
pub fn optimize(
    initial: &PulseWaveform,
    ensemble: &Ensemble,
    kind: FidelityKind,
    config: &OptimizationConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    match initial.uniform_timestep() {
        Some(dt) if (dt - config.timestep).abs() <= 1e-9 * config.timestep => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "initial pulse must be sliced uniformly at the configured timestep {:e} s",
                config.timestep
            )))
        }
    }
    let parameterization = config.parameterization;
    let template = match parameterization {
        ControlParameterization::PhaseOnly => PulseWaveform::new(
            initial
                .segments()
                .iter()
                .map(|s| PulseSegment {
                    rabi: initial.nominal_rabi(),
                    ..*s
                })
                .collect(),
            initial.nominal_rabi(),
        )?,
        ControlParameterization::Cartesian => initial.clone(),
    };
    // Optimizer variables: phases in rad, or Cartesian controls over Ω_nom.
    let unit = match parameterization {
        ControlParameterization::PhaseOnly => 1.0,
        ControlParameterization::Cartesian => template.nominal_rabi(),
    };
    let to_pulse = |x: &[f64]| {
        let physical: Vec<f64> = x.iter().map(|v| v * unit).collect();
        apply_controls(&template, parameterization, &physical)
    };

    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let pulse = to_pulse(x)?;
        let (fidelity, grad_f) = fidelity_and_gradient(&pulse, ensemble, kind, parameterization)?;
        let (pen, grad_p) = penalty(&pulse, config);
        let value = fidelity - pen;
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite (fidelity {fidelity}, penalty {pen})"
            )));
        }
        let grad = grad_f.iter().zip(&grad_p).map(|(f, p)| -(f - p) * unit).collect();
        Ok((-value, grad))
    };

    let mut fidelity_trace = Vec::new();
    let mut objective_trace = Vec::new();
    let settings = LbfgsSettings {
        memory: config.lbfgs_memory,
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
        ..LbfgsSettings::default()
    };
    let x0: Vec<f64> = controls(&template, parameterization).iter().map(|v| v / unit).collect();
    let report = minimize(objective, x0, &settings, |x, value| {
        objective_trace.push(-value);
        if let Ok(p) = to_pulse(x) {
            fidelity_trace.push(ensemble_fidelity(&p, ensemble, kind));
        }
    })?;

    Ok(OptimizationResult {
        pulse: to_pulse(&report.x)?,
        fidelity_trace,
        objective_trace,
        final_gradient_norm: report.gradient.iter().fold(0.0, |m, g| m.max(g.abs())),
        iterations: report.iterations,
        termination: report.termination,
    })
}

/// Runs [`optimize`] and packages the run report with wall time.
pub fn optimize_with_report(
    initial: &PulseWaveform,
    ensemble: &Ensemble,
    kind: FidelityKind,
    config: &OptimizationConfig,
) -> Result<(OptimizationResult, RunReport)> {
    let start = Instant::now();
    let result = optimize(initial, ensemble, kind, config)?;
    let report = RunReport::new(&result, kind, config, start.elapsed().as_secs_f64());
    Ok((result, report))
}

/// JSON form of [`OptimizationConfig`] with the same field names and units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationConfigFile {
    #[serde(default = "defaults::parameterization")]
    pub parameterization: ControlParameterization,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "defaults::gradient_tolerance")]
    pub gradient_tolerance: f64,
    #[serde(default = "defaults::lbfgs_memory")]
    pub lbfgs_memory: usize,
    /// rad/s; absent means no cap.
    #[serde(default)]
    pub amplitude_cap: Option<f64>,
    #[serde(default)]
    pub penalty_amplitude_weight: f64,
    #[serde(default)]
    pub penalty_smoothness_weight: f64,
    /// s
    #[serde(default = "defaults::timestep")]
    pub timestep: f64,
    /// Seed pulse description used when no initial pulse file is given.
    #[serde(default)]
    pub initial: Option<InitialPulse>,
}

/// Flat (or seeded-random) starting waveform.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPulse {
    pub nominal_rabi_hz: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub phase_rad: f64,
    /// When set, phases are drawn uniformly at random with this seed.
    #[serde(default)]
    pub random_seed: Option<u64>,
}

mod defaults {
    use super::ControlParameterization;

    pub fn parameterization() -> ControlParameterization {
        ControlParameterization::PhaseOnly
    }
    pub fn max_iterations() -> usize {
        200
    }
    pub fn gradient_tolerance() -> f64 {
        1e-6
    }
    pub fn lbfgs_memory() -> usize {
        10
    }
    pub fn timestep() -> f64 {
        100e-9
    }
}

impl Default for OptimizationConfigFile {
    fn default() -> Self {
        Self {
            parameterization: defaults::parameterization(),
            max_iterations: defaults::max_iterations(),
            gradient_tolerance: defaults::gradient_tolerance(),
            lbfgs_memory: defaults::lbfgs_memory(),
            amplitude_cap: None,
            penalty_amplitude_weight: 0.0,
            penalty_smoothness_weight: 0.0,
            timestep: defaults::timestep(),
            initial: None,
        }
    }
}

impl OptimizationConfigFile {
    pub fn to_config(&self) -> Result<OptimizationConfig> {
        let config = OptimizationConfig {
            parameterization: self.parameterization,
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            lbfgs_memory: self.lbfgs_memory,
            amplitude_cap: self.amplitude_cap.unwrap_or(f64::INFINITY),
            penalty_amplitude_weight: self.penalty_amplitude_weight,
            penalty_smoothness_weight: self.penalty_smoothness_weight,
            timestep: self.timestep,
        };
        config.validate()?;
        Ok(config)
    }
}

impl InitialPulse {
    pub fn build(&self, timestep: f64) -> Result<PulseWaveform> {
        let rabi = self.nominal_rabi_hz * std::f64::consts::TAU;
        match self.random_seed {
            Some(seed) => PulseWaveform::random_phase(rabi, self.duration_s, timestep, seed),
            None => PulseWaveform::flat(rabi, self.duration_s, timestep, self.phase_rad),
        }
    }
}
