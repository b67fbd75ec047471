//! Command-line layer for `secmimo`: config files, CSV tables, figure
//! sweeps, the verification suites and the simulation driver.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod simulate;
pub mod table;
pub mod verify;

pub use error::{CliError, CliResult};
pub use table::ResultTable;
