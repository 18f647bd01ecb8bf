//! Collision invariants on the Fermi sphere.
//!
//! Particles move on the sphere `|w| = R` in `R^d`; a collision replaces a
//! pair `(w, w_*)` by `(w', w_*')` on the same sphere with the same total
//! momentum. A function `g` is a collision invariant when
//! `g(w) + g(w_*) = g(w') + g(w_*')` for every such collision. In `d >= 3`
//! the invariants are exactly the affine functions `A + B.w`; in `d = 2`
//! they are the functions whose even part `g(w) + g(-w)` is constant.
//!
//! - [`geometry`], [`kinematics`]: sphere points, collision maps, and the
//!   explicit admissible-quadruple constructor.
//! - [`analysis`]: defect statistics, parity decomposition, fits, sampled
//!   nullspaces, and the additivity (Cauchy) pipeline.
//! - [`simulator`]: a one-collision-per-step particle ensemble.
//! - [`funcspec`]: the expression language for test functions.
//! - [`cli`]: the `fermi` command-line tool.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod funcspec;
pub mod geometry;
pub mod io;
pub mod kinematics;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
