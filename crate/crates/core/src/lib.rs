//! Robust mirror pulses for light-pulse atom interferometry.
//!
//! The crate models a driven two-level atom, evaluates composite and
//! optimal-control inversion pulses over inhomogeneous ensembles, and
//! measures what a mirror pulse does to the contrast of a π/2 – π – π/2
//! Mach-Zehnder sequence.
//!
//! | module | contents |
//! |---|---|
//! | [`dynamics`] | propagators, states, `S`-phase |
//! | [`pulse`] | piecewise-constant waveforms and the composite catalog |
//! | [`ensemble`] | detuning × coupling ensembles and fidelity functionals |
//! | [`grape`] | exact gradients, penalties and the L-BFGS optimizer |
//! | [`interferometer`] | Mach-Zehnder fringes and thermal contrast |
//! | [`raman`] | sublevel- and momentum-averaged Raman inversion |
//! | [`analysis`] | robustness widths, response curves, population maps |
//! | [`io`] | pulse, ensemble, profile and table files |
//!
//! Angular frequencies are in rad/s and times in seconds throughout; files
//! store ordinary frequencies in Hz.
//!
//! ```
//! use mirror_grape::analysis::robustness_report;
//! use mirror_grape::pulse::composite;
//!
//! let waltz = composite("waltz", std::f64::consts::TAU * 200e3).unwrap();
//! let report = robustness_report(&waltz).unwrap();
//! assert!((report.width_half - 2.878).abs() < 5e-3);
//! ```

// Guards written as `!(x > 0.0)` deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod grape;
pub mod interferometer;
pub mod io;
pub mod pulse;
pub mod raman;
pub mod units;

pub use error::{Error, Result};
