//! Flow-level simulator for collectives on a ring with optional per-step
//! circuit switching.
//!
//! Each step is expanded into point-to-point flows, routed on either the
//! static ring or the step's perfect matching, and timed from link
//! occupancy. Steps are separated by a global barrier. The simulator does not
//! use the closed-form model, so the two can check each other.

mod flows;
mod sim;
mod topology;

pub use flows::{build_step_flows, route_and_load, step_count, Algorithm, Flow, FlowSet};
pub use sim::{simulate_collective, simulate_phase, simulate_step, SimResult, StepRecord};
pub use topology::{Link, Routing, Topology};
