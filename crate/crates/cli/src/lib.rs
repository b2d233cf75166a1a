//! Configuration-driven experiments for tensor-train regression and the
//! MLP baseline: Monte-Carlo trials, summary tables and comparisons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;

pub use config::{DataConfig, ExperimentConfig, ExperimentKind, MlpSpec, OptimizerKind, TtSpec};
pub use error::{CliError, Result};
pub use experiment::{compare, run, RunOptions, RunResult};
