//! Configuration parsing and on-disk formats.

pub mod config;
pub mod csv;
pub mod snapshot;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use csv::{read_diagnostics, write_diagnostics};
pub use snapshot::{read_snapshot, write_snapshot};
