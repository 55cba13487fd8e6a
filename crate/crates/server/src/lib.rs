//! HTTP API over team formation, live ideation sessions and reflection.

pub mod app;
pub mod config;
pub mod error;
pub mod routes;

pub use app::{team_id, AppState};
pub use config::{Config, ProviderMode};
pub use error::ApiError;
pub use routes::router;
