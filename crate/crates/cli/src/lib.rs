//! Command-line pipeline around `skyflow`: ingesting timestamped sky-image
//! directories, writing flow maps, forecasts and accuracy reports, and
//! generating synthetic test scenes.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod plot;

pub use error::{CliError, Result};
