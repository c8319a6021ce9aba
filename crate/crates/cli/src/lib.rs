//! Batch driver for tumorsim: sample generation, evaluation reports,
//! decomposition runs, slice rendering and manifest checks.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

pub use error::{CliError, Result};
