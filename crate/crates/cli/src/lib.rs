//! Driver for the deformfield pipeline: configuration, artifact files,
//! diagnostic plots and the stage commands.

pub mod config;
pub mod error;
pub mod persist;
pub mod pipeline;
pub mod svg;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
