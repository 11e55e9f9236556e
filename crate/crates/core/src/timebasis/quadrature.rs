use crate::error::{invalid, Result};

use super::legendre::legendre_table;
use super::poly::Interval;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_order(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Nodes and weights mapped onto `interval`; weights carry the Jacobian.
    pub fn mapped<'a>(&'a self, interval: &'a Interval) -> impl Iterator<Item = (f64, f64)> + 'a {
        let half = 0.5 * interval.length();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (interval.from_reference(x), w * half))
    }
}

/// Rule exact for polynomials up to `order`, using `ceil((order + 1) / 2)`
/// points.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order < 1 {
        return Err(invalid("quadrature order must be at least 1"));
    }
    Ok(gauss_legendre_points((order + 1).div_ceil(2)))
}

/// Composite rule on `[-1, 1]` graded geometrically towards `-1`.
///
/// The panels are `[-1, -1 + 2σᴸ]` and `[-1 + 2σᵏ⁺¹, -1 + 2σᵏ]` for
/// `k < levels`, each carrying a Gauss rule of `order`. Integrands with an
/// algebraic singularity at `-1` are integrated with exponential accuracy in
/// `levels`.
pub fn graded_gauss_legendre(order: usize, levels: usize, ratio: f64) -> Result<QuadratureRule> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid(format!("grading ratio {ratio} outside (0, 1)")));
    }
    let base = gauss_legendre(order)?;
    let mut edges: Vec<f64> = (0..=levels)
        .rev()
        .map(|k| 2.0 * ratio.powi(k as i32))
        .collect();
    edges.insert(0, 0.0);
    let mut nodes = Vec::with_capacity(base.len() * edges.len());
    let mut weights = Vec::with_capacity(base.len() * edges.len());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (&x, &w) in base.nodes().iter().zip(base.weights()) {
            nodes.push(-1.0 + a + 0.5 * (b - a) * (x + 1.0));
            weights.push(0.5 * (b - a) * w);
        }
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Rule with exactly `n ≥ 1` points.
pub fn gauss_legendre_points(n: usize) -> QuadratureRule {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on L_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let t = legendre_table(n, x);
            let dx = t.values[n] / t.d1[n];
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let d = legendre_table(n, x).d1[n];
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}
