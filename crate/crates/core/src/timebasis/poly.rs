use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

use super::legendre::legendre_table;

/// Time interval `(left, right]` of positive length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    left: f64,
    right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && right > left) {
            return Err(invalid(format!("degenerate interval ({left}, {right})")));
        }
        Ok(Self { left, right })
    }

    /// The reference interval `[-1, 1]`.
    pub fn reference() -> Self {
        Self {
            left: -1.0,
            right: 1.0,
        }
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn to_reference(&self, t: f64) -> f64 {
        (2.0 * t - self.left - self.right) / self.length()
    }

    pub fn from_reference(&self, xi: f64) -> f64 {
        self.left + 0.5 * self.length() * (xi + 1.0)
    }

    /// `dξ/dt`.
    pub fn scale(&self) -> f64 {
        2.0 / self.length()
    }
}

/// Maps modal coefficients of a degree-`p` polynomial to those of its
/// derivative with respect to the reference variable. Output has
/// `max(p, 1)` rows.
pub fn derivative_matrix(degree: usize) -> DMatrix<f64> {
    let rows = degree.max(1);
    let mut d = DMatrix::zeros(rows, degree + 1);
    for j in 0..rows {
        for k in (j + 1..=degree).step_by(2) {
            d[(j, k)] = (2 * j + 1) as f64;
        }
    }
    d
}

/// Maps modal coefficients of a degree-`p` polynomial to those of its
/// antiderivative vanishing at `ξ = -1` (reference variable).
pub fn antiderivative_matrix(degree: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(degree + 2, degree + 1);
    a[(0, 0)] = 1.0;
    a[(1, 0)] = 1.0;
    for k in 1..=degree {
        let s = 1.0 / (2 * k + 1) as f64;
        a[(k + 1, k)] += s;
        a[(k - 1, k)] -= s;
    }
    a
}

/// Scalar polynomial on an interval in modal Legendre form.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePolynomial {
    interval: Interval,
    coeffs: DVector<f64>,
}

impl TimePolynomial {
    pub fn new(interval: Interval, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("a polynomial needs at least one coefficient"));
        }
        Ok(Self {
            interval,
            coeffs: DVector::from_vec(coeffs),
        })
    }

    pub(crate) fn from_dvector(interval: Interval, coeffs: DVector<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { interval, coeffs }
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs.as_slice()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let tab = legendre_table(self.degree(), self.interval.to_reference(t));
        self.coeffs
            .iter()
            .zip(&tab.values)
            .map(|(c, l)| c * l)
            .sum()
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        let tab = legendre_table(self.degree(), self.interval.to_reference(t));
        let s: f64 = self.coeffs.iter().zip(&tab.d1).map(|(c, l)| c * l).sum();
        s * self.interval.scale()
    }

    pub fn second_derivative_at(&self, t: f64) -> f64 {
        let tab = legendre_table(self.degree(), self.interval.to_reference(t));
        let s: f64 = self.coeffs.iter().zip(&tab.d2).map(|(c, l)| c * l).sum();
        s * self.interval.scale().powi(2)
    }

    pub fn derivative(&self) -> Self {
        let c = derivative_matrix(self.degree()) * &self.coeffs * self.interval.scale();
        Self::from_dvector(self.interval, c)
    }

    /// Antiderivative vanishing at the left endpoint.
    pub fn integral_from_left(&self) -> Self {
        let c = antiderivative_matrix(self.degree()) * &self.coeffs / self.interval.scale();
        Self::from_dvector(self.interval, c)
    }
}

/// Polynomial in time with values in `ℝ^d`: row `k` of `modes` is the
/// spatial coefficient vector multiplying `L_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTimePolynomial {
    interval: Interval,
    modes: DMatrix<f64>,
}

impl VectorTimePolynomial {
    pub fn new(interval: Interval, modes: DMatrix<f64>) -> Result<Self> {
        if modes.nrows() == 0 {
            return Err(invalid("a polynomial needs at least one mode"));
        }
        Ok(Self { interval, modes })
    }

    pub fn zeros(interval: Interval, degree: usize, dim: usize) -> Self {
        Self {
            interval,
            modes: DMatrix::zeros(degree + 1, dim),
        }
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn degree(&self) -> usize {
        self.modes.nrows() - 1
    }

    pub fn dim(&self) -> usize {
        self.modes.ncols()
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let tab = legendre_table(self.degree(), self.interval.to_reference(t));
        self.combine(&tab.values, 1.0)
    }

    pub fn derivative_at(&self, t: f64) -> DVector<f64> {
        let tab = legendre_table(self.degree(), self.interval.to_reference(t));
        self.combine(&tab.d1, self.interval.scale())
    }

    pub fn second_derivative_at(&self, t: f64) -> DVector<f64> {
        let tab = legendre_table(self.degree(), self.interval.to_reference(t));
        self.combine(&tab.d2, self.interval.scale().powi(2))
    }

    fn combine(&self, weights: &[f64], factor: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (k, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                out.axpy(w * factor, &self.modes.row(k).transpose(), 1.0);
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let m = derivative_matrix(self.degree()) * &self.modes * self.interval.scale();
        Self {
            interval: self.interval,
            modes: m,
        }
    }

    pub fn integral_from_left(&self) -> Self {
        let m = antiderivative_matrix(self.degree()) * &self.modes / self.interval.scale();
        Self {
            interval: self.interval,
            modes: m,
        }
    }

    /// `L²(I)`-orthogonal projection onto polynomials of degree `degree`
    /// (modal truncation, or zero padding if `degree` is larger).
    pub fn truncated(&self, degree: usize) -> Self {
        let mut modes = DMatrix::zeros(degree + 1, self.dim());
        let keep = (degree + 1).min(self.modes.nrows());
        modes.rows_mut(0, keep).copy_from(&self.modes.rows(0, keep));
        Self {
            interval: self.interval,
            modes,
        }
    }

    /// `self - other`, padded to the larger degree.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.interval != other.interval || self.dim() != other.dim() {
            return Err(invalid("polynomials live on different intervals or spaces"));
        }
        let deg = self.degree().max(other.degree());
        let mut modes = self.truncated(deg).modes;
        modes -= other.truncated(deg).modes;
        Ok(Self {
            interval: self.interval,
            modes,
        })
    }

    /// Component `j` as a scalar polynomial.
    pub fn component(&self, j: usize) -> TimePolynomial {
        TimePolynomial::from_dvector(self.interval, self.modes.column(j).into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_and_antiderivative_are_inverse() {
        let iv = Interval::new(0.3, 1.1).unwrap();
        let p = TimePolynomial::new(iv, vec![0.5, -1.0, 2.0, 0.25, -0.75]).unwrap();
        let back = p.derivative().integral_from_left();
        for &t in &[0.3, 0.5, 0.77, 1.1] {
            let expect = p.eval(t) - p.eval(0.3);
            assert!((back.eval(t) - expect).abs() < 1e-13);
        }
        assert!(p.integral_from_left().eval(0.3).abs() < 1e-15);
    }

    #[test]
    fn pointwise_derivatives_agree_with_modal_derivative() {
        let iv = Interval::new(-0.2, 0.4).unwrap();
        let p = TimePolynomial::new(iv, vec![1.0, 0.3, -0.4, 0.9, 0.1, -0.2]).unwrap();
        let d = p.derivative();
        let dd = d.derivative();
        for &t in &[-0.2, 0.0, 0.13, 0.4] {
            assert!((d.eval(t) - p.derivative_at(t)).abs() < 1e-10);
            assert!((dd.eval(t) - p.second_derivative_at(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn interval_rejects_degenerate() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, f64::NAN).is_err());
    }
}
