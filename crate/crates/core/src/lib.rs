//! Delay-aware model-free control for active queue management.
//!
//! The crate is split along the closed loop:
//!
//! * [`netparams`]: network constants and the linearization operating point.
//! * [`signals`]: delay lines and sliding windows with trapezoidal quadrature.
//! * [`plant`]: the linearized TCP/AQM delay plant, used only as the truth model.
//! * [`estimators`]: algebraic estimation of the ultra-local term `F` and
//!   trend/slope forecasting.
//! * [`controller`]: output prediction over the delay and the intelligent
//!   proportional law.
//! * [`scenario`]: the experiment engine and the preset scenarios.
//! * [`config`] and [`trace`]: the flat config file format and CSV output used
//!   by the `mfc-aqm` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controller;
pub mod estimators;
pub mod netparams;
pub mod plant;
pub mod scenario;
pub mod signals;
pub mod trace;

pub use controller::{Controller, ControllerConfig, ControllerOutput};
pub use estimators::{EstimatorConfig, TrendEstimate};
pub use netparams::{NetworkParams, OperatingPoint};
pub use plant::{DiscretePlant, GainStrategy, PlantParams, PlantState};
pub use scenario::{preset, run, Metrics, RunOutput, ScenarioError, ScenarioSpec, TraceRecord};
pub use signals::{DelayLine, SlidingWindow};
