//! Space-time finite elements for the second-order wave equation
//! `u'' - Δu = f` on a rectangle with homogeneous Dirichlet data.
//!
//! Time is discretized with the C⁰-in-time Petrov–Galerkin method: continuous
//! piecewise polynomials of degree `p ≥ 2` as trial functions, discontinuous
//! polynomials of degree `p - 1` as test functions, and an upwind jump of the
//! time derivative at every time node. Space uses tensor-product `Q_p`
//! Lagrange elements.
//!
//! On top of the solver the crate provides
//!
//! * the temporal projectors and the C¹ reconstruction behind the estimator
//!   ([`timebasis`], [`reconstruct`]),
//! * a reliable a posteriori bound for the `L∞(L²)` error with explicit
//!   constants ([`estimator`]),
//! * manufactured solutions and the error norms used in convergence studies
//!   ([`errors`]),
//! * an adaptive SOLVE → ESTIMATE → MARK → REFINE loop in time ([`adaptive`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adaptive;
pub mod error;
pub mod errors;
pub mod estimator;
pub mod reconstruct;
pub mod slab;
pub mod spacefem;
pub mod sparse;
pub mod timebasis;

pub use error::{Error, Result};
