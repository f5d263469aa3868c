//! Conical combustion fronts in shear flows.

pub mod barrier;
pub mod conical;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod grid;
pub mod model;
pub mod numerics;
pub mod pulsating;
pub mod verify;

pub use error::{Error, Result};
