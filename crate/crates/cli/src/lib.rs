//! Configuration, reports and command dispatch behind the `bowen-dim`
//! binary.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{load_model, parse_config, serialize_config, ConfigError, LoadedModel, ModelConfig};
pub use pipeline::{run_pipeline, Command, Params, PipelineError, RGrid};
pub use report::{RunReport, Status};
