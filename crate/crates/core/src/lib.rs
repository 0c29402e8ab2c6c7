//! Edge-guided, pose-free reconstruction from event-camera data.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithm of the
//! toolkit: event accumulation, a synthetic event-camera simulator used as a
//! ground-truth oracle, temporal-coherence edge detection, edge-guided
//! Gaussian initialization, a differentiable CPU Gaussian splatting renderer,
//! the tracking/mapping optimization loop, and evaluation metrics.
//!
//! File formats, configuration parsing and the command line live in the
//! `edgesplat` crate.
//!
//! With the `std` feature (on by default) the per-sample loss evaluations of
//! the optimization loop run on a rayon pool. Results are identical to the
//! sequential build: partial gradients are always reduced in sample order.

#![no_std]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod edge;
pub mod error;
pub mod event;
pub mod geometry;
pub mod grid;
pub mod init;
pub mod metrics;
mod par;
pub mod sim;
pub mod slam;
pub mod splat;

pub use error::{Error, Result};
pub use event::{Event, EventMap, EventStream};
pub use geometry::{CameraIntrinsics, PoseSE3};
pub use grid::Grid;

/// Seeded generator used throughout the crate.
pub type SeededRng = rand_chacha::ChaCha8Rng;
