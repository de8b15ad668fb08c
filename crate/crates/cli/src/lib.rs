//! Experiment runners and configuration for the `georiesz` command-line tool.

pub mod config;
pub mod experiments;
pub mod report;
