//! Command implementations behind the `ibob` binary.
//!
//! - `simulate`: path-loss curves for every band and both scenarios.
//! - `fom`: leakage loss, body excess loss and FoM from a curve pair.
//! - `compare`: rank reports and draw SVG charts.

pub mod config;
pub mod error;
pub mod report;
pub mod simulate;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use report::{cmd_compare, cmd_fom, FomArgs};
pub use simulate::{cmd_simulate, SimulateOptions};
