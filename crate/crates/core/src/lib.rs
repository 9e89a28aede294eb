//! Residual reinforcement learning on top of object-centric ProMP
//! trajectories for tight-clearance block insertion.

pub mod demos;
pub mod env;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod plant;
pub mod promp;
pub mod residual;
pub mod sac;

pub use error::{Error, Result};
