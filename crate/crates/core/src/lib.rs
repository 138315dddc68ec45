//! Deterministic and stochastic metamorphosis of landmark sets and periodic
//! scalar images.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod linear;
pub mod matching;
pub mod stochastics;
pub mod uq;

pub use error::{Error, Result};

/// Engine version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
