//! Streaming spectral density estimation with forgetting factors.
//!
//! The crate provides, in dependency order:
//!
//! - [`grid`]: fixed evaluation-frequency grids;
//! - [`spectral`]: the recursive forgetting-factor periodogram (FFP) with
//!   O(1)-per-sample updates and fixed memory, plus batch oracles;
//! - [`sdf`]: parametric spectral density families (AR(p), a
//!   Lorentzian-plus-background ocean model) with analytic gradients;
//! - [`whittle`]: the Whittle likelihood over the FFP, its parameter
//!   gradient, one-step online gradient ascent (FFWE) and likelihood
//!   surfaces;
//! - [`adaptive`]: derivative recursions in the forgetting factor and the
//!   one-step lambda update (AFFWE), with an optional Beta prior;
//! - [`sim`]: seeded generators for drifting sinusoids, AR processes with
//!   change-points and modulated complex AR(1) streams;
//! - [`harness`]: Monte Carlo orchestration, tracking metrics and
//!   distributional checks.

pub mod adaptive;
pub mod error;
pub mod grid;
pub mod harness;
pub mod sdf;
pub mod sim;
pub mod spectral;
pub mod whittle;

pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use spectral::{Centering, ForgettingState, SpectralEstimate};
