//! Files, benchmarks and command line around `j2lambert-core`.

pub mod bench;
pub mod catalog;
pub mod cli;
pub mod clock;
pub mod config;
pub mod dataset;
pub mod error;
pub mod model_io;
pub mod screening;

pub use error::{Error, Result};
pub use j2lambert_core;
