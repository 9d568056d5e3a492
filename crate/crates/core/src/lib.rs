//! Channel models and figure-of-merit analysis for in-body to out-of-body
//! (IBOB) links.
//!
//! - [`tissue`]: Cole-Cole tissue dielectrics and plane-wave propagation.
//! - [`phantom`]: crossed-cylinder body phantom, scenarios and voxelization.
//! - [`eqs`]: electro-quasistatic solver for 21 MHz body-channel couplers.
//! - [`rf`]: layered-path model for RF ISM bands.
//! - [`fom`]: leakage loss, body excess loss and the figure of merit.
//! - [`measurement`]: path-loss CSV ingest and cleanup.

pub mod curve;
pub mod eqs;
pub mod error;
pub mod fom;
pub mod measurement;
pub mod phantom;
pub mod rf;
pub mod tissue;

pub use curve::{PathLossCurve, Source};
pub use error::{Error, Result};
pub use fom::{FomParams, FomReport};
pub use phantom::Scenario;
pub use tissue::Frequency;
