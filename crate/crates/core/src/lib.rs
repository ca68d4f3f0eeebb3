//! Numeric core for learning the mapping between channel state information
//! (CSI) and delay power spectra (DPS).
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation:
//!
//! - [`ndiff`]: dense tensors with define-by-run reverse-mode differentiation,
//!   the transformer building blocks and an Adam optimizer.
//! - [`channel`]: synthetic multipath channels, m-sequences and PN channel
//!   sounding.
//! - [`sounding`]: CIR to DPS/CSI post-processing, normalization and the
//!   windowed dataset container.
//! - [`model`]: the supervised autoencoder (DPS -> CSI -> DPS) and the
//!   decoder-only baseline.
//! - [`train`]: deterministic training, evaluation, path extraction and
//!   ranging.
//!
//! File formats, timing and the command-line tool live in the `c2s-lab`
//! companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod error;
pub mod model;
pub mod ndiff;
pub mod real;
pub mod sounding;
pub mod train;

pub use error::{Error, Result};
pub use real::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
