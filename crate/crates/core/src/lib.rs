//! Compression-based measures of behavioral complexity and programmability.
//!
//! Lossless compression stands in for the uncomputable Kolmogorov complexity.
//! The crate evolves elementary cellular automata and simulated agents under
//! enumerated or streamed inputs, compresses what they produce and derives:
//!
//! - compression curves and Wolfram-class estimates ([`behavior`]),
//! - the variability of compressed lengths across single-bit input
//!   perturbations and its time derivative, the programmability coefficient
//!   ([`programmability`]),
//! - block-decomposition complexity of binary lattices from an empirical
//!   coding-theorem table ([`lattice`]),
//! - phase-space complexity, variability and controllability of stimulus
//!   driven agents ([`envelope`]).

pub mod behavior;
pub mod calibration;
pub mod compress;
pub mod eca;
pub mod envelope;
pub mod error;
pub mod lattice;
pub mod programmability;
pub mod stats;

pub use compress::{CompressorId, SerializationMode};
pub use eca::{Configuration, Rule, SpaceTimeDiagram};
pub use error::{Error, Result};
