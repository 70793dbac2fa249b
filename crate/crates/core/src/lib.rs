//! Recovery of sparse sinusoidal mixtures from severely undersampled
//! linear measurements (generalized line spectral estimation).
//!
//! The crate provides the measurement ensembles (subsampled orthogonal,
//! random time samples, Gaussian, subsampled orthogonal with random signs,
//! Gabor radar, MIMO radar), fine-grid l1 recovery programs with support
//! extraction and amplitude refitting, dual-certificate construction and
//! verification built on the squared Fejér kernel, and an IAA-APES
//! baseline for comparisons.

pub mod certificate;
pub mod error;
pub mod fejer;
pub mod grid;
pub mod iaa;
pub mod ft;
pub mod linalg;
pub mod poly;
pub mod rng;
pub mod solver;
pub mod sensing;
pub mod spectral;

pub use error::{Error, Result};
