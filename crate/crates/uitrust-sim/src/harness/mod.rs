//! Scenario configuration, the simulation world, baseline defenses,
//! metrics and result export.

pub mod baselines;
pub mod config;
pub mod export;
pub mod metrics;
pub mod placement;
pub mod sweep;
pub mod world;

pub use config::{BaselineConfig, Defense, HarnessError, ScenarioConfig};
pub use metrics::{detection_latency_s, misdetection_rate, MetricsReport};
pub use sweep::run_sweep;
pub use world::{run_scenario, RunOutput};
