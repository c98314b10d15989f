//! Pseudospectral solvers for the Kadomtsev-Petviashvili equation family and
//! the hyperbolic-elliptic Davey-Stewartson system on 2-D periodic domains,
//! with the diagnostic and regression machinery for asymptotic scaling studies.
//!
//! The building blocks are:
//!
//! * [`grid`] — periodic grid geometry, FFT transforms, Fourier-multiplier
//!   operators (derivatives, regularized anti-derivative, constraint
//!   projection, spectral translation);
//! * [`linear`] — linear-propagator symbols and integrating factors, the
//!   exact linear-flow oracle, Airy and tail-kernel evaluators;
//! * [`models`] — nonlinear tendencies for KP-I/II, the dissipatively
//!   regularized dispersionless KP, the KdV sector, and Davey-Stewartson;
//! * [`initial_data`] — the initial-condition families;
//! * [`integrator`] — integrating-factor classical RK4 stepping and the
//!   evolution loop;
//! * [`analysis`] — conserved quantities, error norms, asymptotic
//!   reconstruction, break-time estimation, power-law regression;
//! * [`config`], [`snapshot`], [`cli`] — the command-line front end with its
//!   config, binary snapshot, and CSV formats.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod initial_data;
pub mod integrator;
pub mod linear;
pub mod models;
pub mod snapshot;

pub use error::{Error, Result};
pub use grid::{RealField, SpectralField, SpectralGrid};
