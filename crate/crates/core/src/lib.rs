//! Equilibrium engine for two-group collective-action games with shared
//! group-level signals: who participates, when the regime falls, and how
//! both move as the groups' information grows more or less similar.

pub mod committee;
pub mod equilibrium;
pub mod error;
pub mod extensions;
pub mod mask;
pub mod mixing;
pub mod multigroup;
pub mod outcomes;
pub mod population;
pub mod scalar;
pub mod scenario;
pub mod signal;
pub mod simulate;
pub mod two_player;

pub use error::{Error, Result};
pub use scalar::{Exact, Scalar};
