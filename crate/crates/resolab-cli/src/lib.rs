//! Batch driver for resolab experiments.

pub mod commands;
pub mod config;
pub mod output;
