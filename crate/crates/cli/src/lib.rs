//! Command-line pipeline over the field-reconstruction library: synthesize
//! datasets, split them, export input channels, train models per sensor
//! placement, and score the results. Every command is driven by one flat
//! key=value config file and writes deterministic artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
