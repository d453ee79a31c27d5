//! Causal identification with explicit regime indicators.

pub mod ci;
pub mod cli;
pub mod data;
pub mod dist;
pub mod dynamic;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod identify;
pub mod io;
pub mod regimes;
pub mod scm;

pub use error::{Error, Result};
