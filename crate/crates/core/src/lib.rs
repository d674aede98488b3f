//! Numerical core for covariance-based canopy height estimation from SAR
//! single-look-complex (SLC) stacks.
//!
//! The crate is `no_std` (it only needs `alloc`) and holds every algorithm of
//! the pipeline as pure functions:
//!
//! * [`geometry`] / [`raster`]: acquisition geometry, SLC stacks, height rasters.
//! * [`simulate`]: two-layer forward model producing stacks with known truth.
//! * [`tomo`]: ground steering, windowed covariance, feature extraction and
//!   SLC subset selection.
//! * [`specest`]: beamforming and Capon vertical spectra and the profile based
//!   canopy height baseline.
//! * [`datapipe`]: resampling, split assignment, min-max scaling, patching.
//! * [`evalkit`]: masked metrics and the centered strided error protocol.
//!
//! Row-level entry points (`*_row`) exist wherever a stage is parallelised by
//! the std companion crate, so results never depend on the thread schedule.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod datapipe;
pub mod error;
pub mod evalkit;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod raster;
pub mod rng;
pub mod simulate;
pub mod specest;
pub mod tomo;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
