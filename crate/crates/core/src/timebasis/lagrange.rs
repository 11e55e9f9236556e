use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

use super::legendre::legendre_table;

/// Lagrange basis on `[-1, 1]` for a set of distinct nodes, stored through
/// its modal (Legendre) representation.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    /// Column `j` holds the Legendre coefficients of the `j`-th basis function.
    to_modal: DMatrix<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(invalid("Lagrange basis needs at least one node"));
        }
        let mut vandermonde = DMatrix::zeros(n, n);
        for (i, &x) in nodes.iter().enumerate() {
            let tab = legendre_table(n - 1, x);
            for j in 0..n {
                vandermonde[(i, j)] = tab.values[j];
            }
        }
        let to_modal = vandermonde
            .try_inverse()
            .ok_or_else(|| Error::Solver("Lagrange nodes are not distinct".into()))?;
        Ok(Self { nodes, to_modal })
    }

    /// `degree + 1` equispaced nodes including both endpoints.
    pub fn equispaced(degree: usize) -> Self {
        let nodes = if degree == 0 {
            vec![0.0]
        } else {
            (0..=degree)
                .map(|k| -1.0 + 2.0 * k as f64 / degree as f64)
                .collect()
        };
        Self::new(nodes).expect("equispaced nodes are distinct")
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn to_modal(&self) -> &DMatrix<f64> {
        &self.to_modal
    }

    /// Converts nodal rows (one row per node) into modal rows.
    pub fn nodal_to_modal(&self, nodal: &DMatrix<f64>) -> DMatrix<f64> {
        &self.to_modal * nodal
    }

    /// Values of all basis functions at `xi`.
    pub fn values(&self, xi: f64) -> DVector<f64> {
        let tab = legendre_table(self.degree(), xi);
        self.to_modal.tr_mul(&DVector::from_vec(tab.values))
    }

    /// First derivatives (reference variable) of all basis functions at `xi`.
    pub fn derivatives(&self, xi: f64) -> DVector<f64> {
        let tab = legendre_table(self.degree(), xi);
        self.to_modal.tr_mul(&DVector::from_vec(tab.d1))
    }

    /// Second derivatives (reference variable) of all basis functions at `xi`.
    pub fn second_derivatives(&self, xi: f64) -> DVector<f64> {
        let tab = legendre_table(self.degree(), xi);
        self.to_modal.tr_mul(&DVector::from_vec(tab.d2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_property_and_partition_of_unity() {
        for p in 1..=10 {
            let b = LagrangeBasis::equispaced(p);
            for (i, &x) in b.nodes().iter().enumerate() {
                let v = b.values(x);
                for j in 0..=p {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v[j] - expect).abs() < 1e-10, "p={p} i={i} j={j}");
                }
            }
            let v = b.values(0.123);
            assert!((v.sum() - 1.0).abs() < 1e-11);
            assert!(b.derivatives(0.3).sum().abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_basis_closed_form() {
        let b = LagrangeBasis::equispaced(2);
        let x: f64 = 0.4;
        let v = b.values(x);
        assert!((v[0] - 0.5 * x * (x - 1.0)).abs() < 1e-14);
        assert!((v[1] - (1.0 - x * x)).abs() < 1e-14);
        assert!((v[2] - 0.5 * x * (x + 1.0)).abs() < 1e-14);
        let d2 = b.second_derivatives(x);
        assert!((d2[0] - 1.0).abs() < 1e-13 && (d2[1] + 2.0).abs() < 1e-13);
    }
}
