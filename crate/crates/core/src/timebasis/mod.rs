//! One-dimensional polynomial machinery in time.
//!
//! Every polynomial is stored in modal form: coefficients with respect to the
//! Legendre polynomials `L_0, L_1, ...` of the interval mapped affinely onto
//! the reference interval `[-1, 1]`. Nodal (Lagrange) data is converted on
//! entry through [`LagrangeBasis`].

mod constants;
mod lagrange;
mod legendre;
mod poly;
mod projectors;
mod quadrature;

pub use constants::{c1_squared, c2_squared, c3, c4, mu, reconstruction_constants};
pub use lagrange::LagrangeBasis;
pub use legendre::{legendre_eval, legendre_table, LegendreTable};
pub use poly::{
    antiderivative_matrix, derivative_matrix, Interval, TimePolynomial, VectorTimePolynomial,
};
pub use projectors::{
    integrated_thomee, project_h1, project_l2, project_l2_with_rule, thomee_project,
};
pub use quadrature::{
    gauss_legendre, gauss_legendre_points, graded_gauss_legendre, QuadratureRule,
};
