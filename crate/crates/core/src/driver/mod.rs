//! Config-driven pipelines and the descent loop.

mod commands;
mod config;
mod optimize;
mod output;

pub use commands::{execute, run_command, Command, CommandReport, EXIT_CONFIG, EXIT_ERROR, EXIT_OK};
pub use config::{
    Assembled, BumpSpec, CostConfig, MeshConfig, ModelConfig, OutputConfig, Probe, RunConfig, TargetConfig,
    TaylorConfig, TaylorDirection, TimeConfig,
};
pub use optimize::{
    descent_direction, run_optimization, GradientSettings, IterationRecord, OptimizationHistory, OptimizationSettings,
    StopReason,
};
pub use output::{RunDir, RunStatus, VERSION};
