//! Entropies of one-dimensional projections of log-concave random vectors.
//!
//! - [`pwpoly`]: exact algebra of compactly supported piecewise-polynomial
//!   densities (evaluation, integration, convolution, pushforward).
//! - [`entropy`]: differential entropy, the entropy/maximum sandwich and the
//!   trapezoid entropy closed form.
//! - [`constructions`]: trapezoids, the two-bump density and the
//!   `√λX + √(1-λ)X'` family with its closed-form entropies.
//! - [`lc2d`]: symmetric log-concave planar models and their projections,
//!   Busemann norm, γ ratio and the derivative functional.
//! - [`harness`]: inequality checks, conjecture campaigns and certificates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod jsonfmt;
pub mod lc2d;
pub mod poly;
pub mod pwpoly;
pub mod quadrature;

pub use entropy::{entropy, entropy_bounds, trapezoid_entropy_i, EntropyMethod, EntropyValue};
pub use error::{Error, Result};
pub use lc2d::{LcModel2D, Projection};
pub use pwpoly::PiecewisePolyDensity;
