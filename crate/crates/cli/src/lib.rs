//! Experiment runners behind the `spqc` command-line tool.

pub mod config;
pub mod experiments;
pub mod svg;
