//! Reproducible experiment driver for intrinsic Diophantine
//! approximation on rational quadric hypersurfaces.
//!
//! The binary front end (`quadric-dioph <subcommand> --config <file>`)
//! dispatches to [`experiments::run`], which validates the JSON
//! config, resolves the quadratic form, pulls rational-point tables
//! through the persistent [`cache`], runs the requested experiment
//! from `quadric-dioph-core`, and writes `data.csv`, `summary.json`
//! and `manifest.json` under `results/<experiment>/<config-hash>/`.
//! Exit status: 0 when every check passes, 1 on a check failure, 2 on
//! a usage or configuration error.

pub mod cache;
pub mod config;
pub mod experiments;

pub use config::{ConfigError, Experiment, ExperimentConfig, Manifest};
pub use experiments::{run, RunError, RunReport};
