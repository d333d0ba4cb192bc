//! Lie-splitting solver for incompressible channel flow coupled to a
//! viscoelastic plate with fractional damping.
//!
//! The fluid lives on the fixed reference channel `Γ × (0, 1)`, `Γ` the
//! periodic square `[0, 2π)²`, and is pulled back through the harmonic
//! extension of the plate displacement. Each time step advances the plate
//! alone, then the fluid together with the plate velocity, and records the
//! discrete energy balance of both half steps.

// Numeric loops index several parallel arrays at once, and negated
// comparisons are how NaN inputs get rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ale;
pub mod channel;
pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod fluid;
pub mod krylov;
pub mod output;
pub mod splitting;
pub mod structure;
pub mod torus;

pub use error::{Error, Result};
