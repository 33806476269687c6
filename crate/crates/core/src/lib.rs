//! Finite-difference simulation of acoustic waves in 2D and 3D.
//!
//! The crate mirrors the usual forward-modelling workflow:
//!
//! - [`space_model`] builds the computational grid (physical box, absorbing
//!   layer, stencil halo), resamples velocity/density and sets up damping.
//! - [`time_model`] picks the time step and snapshot stride.
//! - [`acquisition`] places sources and receivers off-grid with
//!   Kaiser-windowed sinc weights and generates wavelets.
//! - [`kernel`] advances the second-order-in-time explicit scheme, serially
//!   or on a thread pool, returning snapshots and a seismogram.
//! - [`verify`] holds the analytical and manufactured references together
//!   with error norms and convergence-rate fitting.
//! - [`io_formats`], [`config`] and [`bench`] are the plumbing behind the
//!   command-line driver.

pub mod acquisition;
pub mod bench;
pub mod config;
pub mod error;
pub mod io_formats;
pub mod kernel;
pub mod numerics;
pub mod real;
pub mod space_model;
pub mod time_model;
pub mod verify;

pub use error::{Error, Result};
pub use real::{Precision, Real};
