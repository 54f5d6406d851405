//! Gradient ascent pulse engineering over a discretized phase or Cartesian waveform.

pub mod expm;
pub mod gradient;
pub mod lbfgs;
pub mod optimize;
pub mod penalty;

pub use gradient::{apply_controls, controls, fidelity_and_gradient, fidelity_gradient, ControlParameterization};
pub use lbfgs::{LbfgsSettings, Termination};
pub use optimize::{
    optimize, optimize_with_report, InitialPulse, OptimizationConfig, OptimizationConfigFile, OptimizationResult,
    RunReport,
};
pub use penalty::penalty;
