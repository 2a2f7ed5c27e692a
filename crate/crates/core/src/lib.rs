//! Complex-valued neural networks with a polarimetric SAR data pipeline.
//!
//! The crate is organized around six building blocks:
//!
//! - [`ctensor`]: complex/real n-d tensors and the arithmetic kernels.
//! - [`grad`]: tape-based reverse-mode gradients in split-real form
//!   (every complex parameter is differentiated as an (Re, Im) pair).
//! - [`nn`]: layers, activations, initializers, losses and metrics for
//!   both complex and real value domains.
//! - [`polsar`]: scattering vector -> Pauli vector -> coherency matrix
//!   pipeline, channel encodings, synthetic scene generation and scene I/O.
//! - [`sampling`]: patch extraction, spatial splitting, pixel sampling and
//!   the two class-balancing methods.
//! - [`models`]: declarative builders for the six architectures
//!   (CV/RV x MLP/CNN/FCNN) including real-equivalent dimensioning.

pub mod ctensor;
pub mod error;
pub mod grad;
pub mod models;
pub mod nn;
pub mod polsar;
pub mod sampling;

pub use error::{Error, Result};
