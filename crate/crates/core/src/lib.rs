//! Confidence-distribution inference for two-arm binomial trials.
//!
//! The crate builds p-value functions (confidence distributions) for a
//! difference in proportions, carries them through estimated power curves to
//! inference on the power of a future study, computes probability-of-success
//! estimators, and simulates the operating characteristics of Go/No-Go rules.
//!
//! Module map:
//! - [`binom_model`]: likelihood, unrestricted and null-restricted MLEs, LRT/Wald statistics
//! - [`grid`]: parameter discretisation shared by every tabulated function
//! - [`pvfn`]: p-value functions, confidence curves and densities
//! - [`combine`]: convolution, "and" and "or" combination of p-value functions
//! - [`power`]: power curves, minimum detectable effects, inference on power
//! - [`pos`]: probability-of-success estimators
//! - [`design_aux`]: effective sample size and cross-phase extrapolation
//! - [`discrete_cd`]: inference on a finite ordered parameter space
//! - [`exact_oracles`]: exact confidence distributions used as test oracles
//! - [`simlab`]: Monte Carlo evaluation of decision rules
//! - [`io`]: file formats and environment reporting
//! - [`presets`]: the worked design configurations

// `!(x > 0.0)` is used deliberately so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binom_model;
pub mod combine;
pub mod design_aux;
pub mod discrete_cd;
pub mod dist;
pub mod error;
pub mod exact_oracles;
pub mod grid;
pub mod io;
pub mod pos;
pub mod power;
pub mod presets;
pub mod pvfn;
pub mod simlab;

pub use binom_model::{RateParams, TwoArmCounts};
pub use error::{Error, Result};
pub use grid::ParamGrid;

pub use power::{PowerCurve, PowerPValueFunction, TrialDesign};
pub use pvfn::{ConfidenceCurve, ConfidenceDensity, PValueFunction, Tail};

/// Version stamped into every output file and report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
