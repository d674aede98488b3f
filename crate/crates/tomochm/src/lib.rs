//! File formats, configuration, parallel drivers and the command-line tool
//! around `tomochm-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod hash;
pub mod npy;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod stack_io;

pub use error::{Error, Result};
pub use tomochm_core as core;
