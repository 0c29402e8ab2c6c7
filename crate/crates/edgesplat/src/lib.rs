//! File formats, configuration and the command line around `edgesplat-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;

pub use config::Config;
pub use error::{Error, Result};
