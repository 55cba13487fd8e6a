//! Human-multi-agent team formation, ideation sessions and reflection.

pub mod agent;
pub mod clock;
pub mod idea;
pub mod llm;
pub mod persistence;
pub mod pipelines;
pub mod presets;
pub mod reflection;
pub mod session;
pub mod team;
