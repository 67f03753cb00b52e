//! Config files, experiment runners, CSV logs and SVG figures for
//! `nlvg-core`. The `nlvg` binary is a thin clap wrapper over [`commands`].
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{ConfigError, RunConfig};
pub use run::CliError;
