//! Channel knowledge map (CKM) toolkit.
//!
//! Builds location-tagged channel gain maps (CGM) and channel path maps (CPM)
//! from propagation samples and uses them for two tasks: interference-aware
//! D2D sub-band assignment and training-free mmWave beam selection. Ground
//! truth comes from a deterministic image-method oracle ([`propagation`]).

pub mod cli;
pub mod d2d;
pub mod dataset;
pub mod error;
pub mod io;
pub mod mlp;
pub mod mmwave;
pub mod plfit;
pub mod propagation;
pub mod scene;
pub mod store;

pub use error::{CkmError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
