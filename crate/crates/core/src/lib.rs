//! Information quantities of parametric quantum channel families.
//!
//! Channels are handled through their Choi operators. The crate computes the
//! channel 2-Rényi divergence, right-logarithmic-derivative (RLD) Fisher
//! information norms, and simulates a discretization protocol that transmits
//! a channel from a family to a remote party as a classical program.

pub mod acceptance;
pub mod bounds;
pub mod channels;
pub mod error;
pub mod family_file;
pub mod fisher;
pub mod divergences;
pub mod linalg;
pub mod metrology;
pub mod optimize;
pub mod protocol;
pub mod sampling;

pub use error::{Error, Result};

/// Library version, embedded in CLI outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
