//! Block-modular variational quantum circuits: a fully connected network of
//! small quantum neurons, simulated exactly on classical hardware.

pub mod data;
pub mod error;
pub mod network;
pub mod qsim;
pub mod theory;
pub mod train;

pub use error::{Error, Result};
