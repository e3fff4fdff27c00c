//! Simulation and verification toolkit for the nonlocal time-fractional
//! reaction-diffusion equation
//!
//! ```text
//! ∂^α u / ∂t^α = Δu + μ u² (1 − k J∗u) − γ u
//! ```
//!
//! and its degenerate-diffusion variant with global mass coupling.

pub mod diagnostics;
pub mod error;
pub mod fode;
pub mod fractional;
pub mod grid;
pub mod kernels;
pub mod mlf;
pub mod quad;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
