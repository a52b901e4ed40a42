// SPDX-License-Identifier: Apache-2.0
//! Numerical Stieltjes calculus on `[0, T]`.
//!
//! A [`Derivator`] `g` (piecewise density plus finitely many jumps) induces the
//! measure `μ_g` and the g-derivative. On top of that this crate provides
//! half-open g-integrals, g-exponentials, g-Wronskians, and solvers for
//! `v'' + P v' + Q v = f` in the g-sense, together with brute-force oracles and
//! verification suites used to cross-check every formula.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature nodes and weights are kept as published.
#![allow(clippy::excessive_precision)]

pub mod derivator;
pub mod error;
pub mod gcalculus;
pub mod gmeasure;
pub mod helmholtz;
pub mod mutation;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod verify;
pub mod wronskian;

pub use derivator::{Density, Derivator, DerivatorConfig, Jump, Piece, PointClass};
pub use error::{Error, Result};
pub use gmeasure::{GFunction, Shape};
pub use num_complex::Complex64;

/// Default number of grid cells for tabulated prefix integrals and residuals.
pub const DEFAULT_GRID_N: usize = 4096;
