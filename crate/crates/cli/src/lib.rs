//! Command-line plumbing for ucp-lab: configuration schema, geometry
//! construction, experiment execution and campaign orchestration.

pub mod campaign;
pub mod config;
pub mod scene;
pub mod tasks;

pub use campaign::{run_campaign, CampaignOutcome};
pub use config::{CampaignConfig, ConfigError, ExperimentConfig};
pub use tasks::{run_experiment, Check, ExperimentReport};
