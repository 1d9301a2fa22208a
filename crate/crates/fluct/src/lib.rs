//! Fluctuation theory for phase-type jump diffusions.
//!
//! The process family is
//!
//! ```text
//! X_t = drift * t + sigma * B_t + sum_{i<=N+(t)} U+_i - sum_{j<=N-(t)} U-_j
//! ```
//!
//! with compound Poisson jump components whose magnitudes follow phase-type
//! laws. Every Laplace/characteristic exponent in this family is a rational
//! function, so running-extremum laws at an independent exponential time,
//! first-passage transforms with overshoot, scale functions and the perpetual
//! American put all admit exact finite expressions built from polynomial
//! roots and residues.
//!
//! Modules:
//! - [`models`]: the model family, phase-type algebra and path-regularity
//!   classification.
//! - [`wiener_hopf`]: running-infimum factors, scale functions, subordinator
//!   resolvents and the factorization identity.
//! - [`passage`]: first-passage/overshoot transforms and identity checks.
//! - [`american`]: the perpetual put (threshold, value, pasting diagnosis,
//!   optimality verification).
//! - [`montecarlo`]: an exact path simulator (no time-discretization bias)
//!   that arbitrates every closed form above.
//! - [`fleet`]: named reference models used by the verification commands.

// Validation guards are written `!(x > 0.0)` so NaN inputs fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod american;
pub mod checks;
pub mod error;
pub mod fleet;
pub mod models;
pub mod montecarlo;
pub mod passage;
pub mod poly;
pub mod quad;
pub mod wiener_hopf;

pub use error::FluctError;
pub use models::{JumpComponent, LevyModel, PhaseType, RegularityReport};
pub use wiener_hopf::{ExpMixture, RationalFactor, RootSet, ScaleFunction};
