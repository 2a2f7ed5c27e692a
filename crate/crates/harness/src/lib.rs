//! Experiment harness: training loop (Adam on the average cross-entropy),
//! Monte-Carlo experiment runner, metric aggregation and grid comparison.

pub mod config;
pub mod experiment;
pub mod grid;
pub mod train;

pub use config::{Balancing, ExperimentConfig, SceneSource, SplitMode};
pub use experiment::{aggregate, run_experiment, run_trial, AggregateResult, TrialResult};
pub use grid::{compare_grid, table_csv, ComparisonTable, GridCell};
pub use train::{evaluate, train, Adam, EpochStats, TrainConfig};
