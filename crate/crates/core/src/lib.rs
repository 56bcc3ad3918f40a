//! Planning and simulation of AllReduce-family collectives on ring
//! interconnects that can reconfigure into per-step perfect matchings.
//!
//! - [`cost_model`]: closed-form step and phase costs for Ring, static
//!   Recursive Doubling and threshold-switched Recursive Doubling.
//! - [`planner`]: picks Ring or a per-phase reconfiguration threshold.
//! - [`flowsim`]: flow-level simulator used as an independent check of the
//!   model and as the engine behind sweeps.
//! - [`sweep`]: grid experiments and their CSV output.

pub mod cost_model;
pub mod error;
pub mod flowsim;
pub mod params;
pub mod planner;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{AgModel, Collective, CostParams, Phase};
pub use planner::{Mode, PhaseChoice, Plan, SelectionRule};
