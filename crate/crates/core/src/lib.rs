//! Gaze-behavior analytics for predicting how noticeable avatar-motion
//! redirection is, plus the adaptive redirection controller driven by it.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! anything touching the filesystem live in the `gazenotice` companion crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod events;
pub mod features;
pub mod geom;
pub mod ipa;
pub mod learn;
pub mod model;
pub mod redirect;
pub mod sim;
pub mod stats;
pub mod wavelet;

pub use error::{Error, Result};
pub use geom::Vec3;
