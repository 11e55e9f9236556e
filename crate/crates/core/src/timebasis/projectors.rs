//! Temporal projectors applied to functions given by evaluators.
//!
//! Derivatives are never approximated numerically: operators that need `w'`
//! take it as a second evaluator.

use nalgebra::DVector;

use crate::error::{invalid, Result};

use super::legendre::legendre_table;
use super::poly::{Interval, TimePolynomial};
use super::quadrature::{gauss_legendre_points, QuadratureRule};

/// Extra Gauss points used by the evaluator-based projectors beyond what the
/// target degree needs; integrands are smooth but not polynomial.
const EXTRA_POINTS: usize = 16;

/// `L²(I)`-orthogonal projection of `w` onto polynomials of degree `degree`.
pub fn project_l2(interval: &Interval, degree: usize, w: impl Fn(f64) -> f64) -> TimePolynomial {
    let rule = gauss_legendre_points(degree + EXTRA_POINTS);
    project_l2_with_rule(interval, degree, &rule, w)
}

/// As [`project_l2`], with the moments computed by the given rule.
pub fn project_l2_with_rule(
    interval: &Interval,
    degree: usize,
    rule: &QuadratureRule,
    w: impl Fn(f64) -> f64,
) -> TimePolynomial {
    let mut coeffs = DVector::zeros(degree + 1);
    for (&xi, &wq) in rule.nodes().iter().zip(rule.weights()) {
        let val = w(interval.from_reference(xi));
        let tab = legendre_table(degree, xi);
        for k in 0..=degree {
            coeffs[k] += wq * val * tab.values[k];
        }
    }
    for k in 0..=degree {
        coeffs[k] *= (2 * k + 1) as f64 / 2.0;
    }
    TimePolynomial::from_dvector(*interval, coeffs)
}

/// `H¹`-type projection: `r(left) = w(left)` and `(w' - r', q') = 0` for all
/// `q` of degree `degree`.
pub fn project_h1(
    interval: &Interval,
    degree: usize,
    w: impl Fn(f64) -> f64,
    dw: impl Fn(f64) -> f64,
) -> Result<TimePolynomial> {
    if degree < 1 {
        return Err(invalid("H1 projection needs target degree >= 1"));
    }
    let slope = project_l2(interval, degree - 1, dw);
    Ok(shift_integral(&slope, w(interval.left())))
}

/// Thomée operator: `w - P̃w` is `L²`-orthogonal to degree `degree - 1` and
/// `P̃w(right) = w(right)`.
pub fn thomee_project(
    interval: &Interval,
    degree: usize,
    w: impl Fn(f64) -> f64,
) -> TimePolynomial {
    let right_value = w(interval.right());
    let proj = project_l2(interval, degree, w);
    let mut coeffs = DVector::from_column_slice(proj.coeffs());
    // L_k(1) = 1: the top mode absorbs the endpoint defect.
    let lower: f64 = coeffs.iter().take(degree).sum();
    coeffs[degree] = right_value - lower;
    TimePolynomial::from_dvector(*interval, coeffs)
}

/// Integrated Thomée operator `𝒫w = w(left) + ∫_left^t P̃_{degree-1}(w')`.
///
/// Matches `w` at both endpoints, `w'` at the right endpoint, and is
/// `L²`-orthogonal to degree `degree - 3`.
pub fn integrated_thomee(
    interval: &Interval,
    degree: usize,
    w: impl Fn(f64) -> f64,
    dw: impl Fn(f64) -> f64,
) -> Result<TimePolynomial> {
    if degree < 2 {
        return Err(invalid(
            "integrated Thomée operator needs target degree >= 2",
        ));
    }
    let slope = thomee_project(interval, degree - 1, dw);
    Ok(shift_integral(&slope, w(interval.left())))
}

fn shift_integral(slope: &TimePolynomial, left_value: f64) -> TimePolynomial {
    let integral = slope.integral_from_left();
    let mut coeffs = DVector::from_column_slice(integral.coeffs());
    coeffs[0] += left_value;
    TimePolynomial::from_dvector(*slope.interval(), coeffs)
}
