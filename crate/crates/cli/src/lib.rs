//! Headless driver: simulated sessions with scripted human policies, log
//! replay and cross-session statistics.

pub mod policy;
pub mod simulate;
pub mod stats;

pub use policy::{preset, HumanPolicy};
pub use simulate::{simulate, PolicyReport, SimOptions};
