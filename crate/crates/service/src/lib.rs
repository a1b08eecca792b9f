//! IO, HTTP service and command-line front end of the driving-scene editing
//! simulator. The simulation itself lives in [`drivesim_core`].

pub use drivesim_core as core;

pub mod artifacts;
pub mod backend;
pub mod cli;
pub mod formats;
#[cfg(feature = "remote")]
pub mod remote;
pub mod scene_file;
pub mod server;
