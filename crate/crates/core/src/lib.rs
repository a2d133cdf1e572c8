//! Online estimation of partially observed, bandlimited graph signals under
//! impulsive noise.
//!
//! The crate covers graph construction ([`graph`]), the graph Fourier basis
//! with bandlimiting and sampling operators ([`spectral`]), heavy-tailed noise
//! generation ([`noise`]), the GLMS / GLMP / G-Sign update rules
//! ([`estimators`]), and deviation metrics with the mean-square stability
//! analysis of the sign-error update ([`analysis`]). Plain-text readers and
//! writers for graphs and cached spectral bases live in [`io`].

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
