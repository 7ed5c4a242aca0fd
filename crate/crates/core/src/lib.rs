//! Simulation and verification of a birth–death random walk in a random
//! environment observing a random scenery, together with its self-similar
//! scaling limits.

pub mod analysis;
pub mod birth_death;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod limit_process;
pub mod rand_fields;
pub mod scenery;
pub mod site_array;

pub use error::{Error, Result};
