//! Bragg scattering of two counter-propagating cavity modes off ultracold
//! atoms in a one-dimensional optical lattice.
//!
//! Times are in units of `1/g` and frequencies in units of `g` throughout.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice_stats;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod states;
pub mod stats;
pub mod twowell;

pub use error::{Error, Result};
pub use geometry::{LatticeGeometry, Spacing, SpacingClass};
pub use states::{AtomicState, Configuration, EnumerationOptions, StateKind};
