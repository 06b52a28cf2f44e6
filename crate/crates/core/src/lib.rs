//! Dynamic virtual power plant (DVPP) fast-frequency control.
//!
//! A deterministic discrete-time simulator and library for grid-following
//! fast frequency regulation by a heterogeneous ensemble (wind, PV,
//! STATCOM): a desired frequency-to-power transfer function is
//! disaggregated across the units through static, dynamic or adaptive
//! participation factors, local PID matching loops drive linearized plant
//! models, and an equivalent-grid swing model closes the loop.
//!
//! Layout:
//! * [`tf`] — rational z-domain algebra and fixed-step LTI simulation,
//! * [`plants`] — the published primary-source models and setpoint rules,
//! * [`control`] — desired behavior, participation factors, matching PIDs,
//! * [`grid`] — swing equation, governor, frequency measurement,
//! * [`scenario`] — experiment configs, the closed-loop runner, traces,
//!   metrics, and variant comparison.

pub mod control;
pub mod error;
pub mod grid;
pub mod plants;
pub mod scenario;
pub mod tf;

pub use error::{Error, Result};
