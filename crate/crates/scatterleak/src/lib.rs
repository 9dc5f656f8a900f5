//! Trace files, experiment configuration, the shield × modality harness and
//! report rendering on top of [`scatterleak_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod harness;
pub mod report;
pub mod traceio;

pub use config::{AnalysisConfig, ExperimentConfig};
pub use error::{Error, Result};
pub use harness::{ComparisonTable, PipelineSeeds, TableRow};
