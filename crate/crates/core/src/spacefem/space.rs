use nalgebra::{DMatrix, DVector};

use super::mesh::RectMesh;
use crate::error::{invalid, Error, Result};
use crate::sparse::{CsrMatrix, SparseCholesky};
use crate::timebasis::{gauss_legendre, LagrangeBasis};

/// Coefficients of a finite element function over the interior nodes.
pub type SpatialVector = DVector<f64>;

const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// A quadrature point of the tensor Gauss rule, weight includes the Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpatialNorms {
    pub l2: f64,
    pub h1_semi: f64,
}

/// Reference-element tables of the 1D nodal basis at the Gauss nodes.
#[derive(Debug, Clone)]
struct Tables {
    values: DMatrix<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

#[derive(Debug)]
pub struct SpatialSpace {
    mesh: RectMesh,
    degree: usize,
    basis: LagrangeBasis,
    nodes_x: usize,
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    mass_factor: Option<SparseCholesky>,
    stiffness_factor: Option<SparseCholesky>,
    tables: Tables,
    quad_points: Vec<QuadPoint>,
    points_per_element: usize,
}

impl SpatialSpace {
    pub fn new(mesh: RectMesh, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(invalid("spatial degree must be at least 1"));
        }
        let basis = LagrangeBasis::equispaced(degree);
        let rule = gauss_legendre(2 * degree + 3)?;
        let nq = rule.len();
        let np = degree + 1;
        let mut tables = Tables {
            values: DMatrix::zeros(nq, np),
            d1: DMatrix::zeros(nq, np),
            d2: DMatrix::zeros(nq, np),
        };
        for (q, &xi) in rule.nodes().iter().enumerate() {
            tables.values.set_row(q, &basis.values(xi).transpose());
            tables.d1.set_row(q, &basis.derivatives(xi).transpose());
            tables
                .d2
                .set_row(q, &basis.second_derivatives(xi).transpose());
        }

        let nodes_x = mesh.nx() * degree + 1;
        let nodes_y = mesh.ny() * degree + 1;
        let mut dof_of_node = vec![None; nodes_x * nodes_y];
        let mut node_of_dof = Vec::new();
        for gy in 1..nodes_y - 1 {
            for gx in 1..nodes_x - 1 {
                let node = gx + nodes_x * gy;
                dof_of_node[node] = Some(node_of_dof.len());
                node_of_dof.push(node);
            }
        }

        let (hx, hy) = (mesh.hx(), mesh.hy());
        let mut quad_points = Vec::with_capacity(mesh.num_elements() * nq * nq);
        for ey in 0..mesh.ny() {
            for ex in 0..mesh.nx() {
                let x0 = mesh.x_range().0 + ex as f64 * hx;
                let y0 = mesh.y_range().0 + ey as f64 * hy;
                for qy in 0..nq {
                    for qx in 0..nq {
                        quad_points.push(QuadPoint {
                            x: x0 + 0.5 * hx * (rule.nodes()[qx] + 1.0),
                            y: y0 + 0.5 * hy * (rule.nodes()[qy] + 1.0),
                            weight: rule.weights()[qx] * rule.weights()[qy] * 0.25 * hx * hy,
                        });
                    }
                }
            }
        }

        let mut space = Self {
            mesh,
            degree,
            basis,
            nodes_x,
            dof_of_node,
            node_of_dof,
            mass: CsrMatrix::identity(0),
            stiffness: CsrMatrix::identity(0),
            mass_factor: None,
            stiffness_factor: None,
            tables,
            quad_points,
            points_per_element: nq * nq,
        };
        let (mass, stiffness) = space.assemble(true, rule.weights());
        if !space.is_empty() {
            space.mass_factor = Some(SparseCholesky::new(&mass)?);
            space.stiffness_factor = Some(SparseCholesky::new(&stiffness)?);
        }
        space.mass = mass;
        space.stiffness = stiffness;
        Ok(space)
    }

    fn element_matrices_1d(&self, weights: &[f64], h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let t = &self.tables;
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(weights));
        let mass = t.values.transpose() * &w * &t.values * (0.5 * h);
        let stiff = t.d1.transpose() * &w * &t.d1 * (2.0 / h);
        (mass, stiff)
    }

    fn assemble(&self, eliminate: bool, weights: &[f64]) -> (CsrMatrix, CsrMatrix) {
        let np = self.degree + 1;
        let (mx, kx) = self.element_matrices_1d(weights, self.mesh.hx());
        let (my, ky) = self.element_matrices_1d(weights, self.mesh.hy());
        let index = |node: usize| -> Option<usize> {
            if eliminate {
                self.dof_of_node[node]
            } else {
                Some(node)
            }
        };
        let n = if eliminate {
            self.dim()
        } else {
            self.dof_of_node.len()
        };
        let mut mt = Vec::new();
        let mut kt = Vec::new();
        for ey in 0..self.mesh.ny() {
            for ex in 0..self.mesh.nx() {
                let nodes = self.element_nodes(ex, ey);
                for a in 0..np * np {
                    let Some(i) = index(nodes[a]) else { continue };
                    let (ax, ay) = (a % np, a / np);
                    for b in 0..np * np {
                        let Some(j) = index(nodes[b]) else { continue };
                        let (bx, by) = (b % np, b / np);
                        mt.push((i, j, mx[(ax, bx)] * my[(ay, by)]));
                        kt.push((
                            i,
                            j,
                            kx[(ax, bx)] * my[(ay, by)] + mx[(ax, bx)] * ky[(ay, by)],
                        ));
                    }
                }
            }
        }
        (
            CsrMatrix::from_triplets(n, n, &mt),
            CsrMatrix::from_triplets(n, n, &kt),
        )
    }

    /// Mass and stiffness matrices over every node, boundary included.
    pub fn full_matrices(&self) -> Result<(CsrMatrix, CsrMatrix)> {
        let rule = gauss_legendre(2 * self.degree + 3)?;
        Ok(self.assemble(false, rule.weights()))
    }

    fn element_nodes(&self, ex: usize, ey: usize) -> Vec<usize> {
        let p = self.degree;
        let mut nodes = Vec::with_capacity((p + 1) * (p + 1));
        for ay in 0..=p {
            for ax in 0..=p {
                nodes.push((ex * p + ax) + self.nodes_x * (ey * p + ay));
            }
        }
        nodes
    }

    fn local_coeffs(&self, v: &SpatialVector, ex: usize, ey: usize) -> DMatrix<f64> {
        let np = self.degree + 1;
        let nodes = self.element_nodes(ex, ey);
        DMatrix::from_fn(np, np, |ax, ay| {
            self.dof_of_node[nodes[ax + np * ay]].map_or(0.0, |k| v[k])
        })
    }

    fn check_len(&self, v: &SpatialVector) {
        assert_eq!(v.len(), self.dim(), "spatial vector length mismatch");
    }

    /// Applies `f(local coefficients, element index)` to produce per-point samples.
    fn sample_elementwise<T: Copy + Default>(
        &self,
        v: &SpatialVector,
        per_element: impl Fn(&DMatrix<f64>) -> Vec<T>,
    ) -> Vec<T> {
        self.check_len(v);
        let mut out = Vec::with_capacity(self.quad_points.len());
        for ey in 0..self.mesh.ny() {
            for ex in 0..self.mesh.nx() {
                let c = self.local_coeffs(v, ex, ey);
                out.extend(per_element(&c));
            }
        }
        out
    }

    fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
        // column-major storage matches q = qx + nq·qy
        m.as_slice().to_vec()
    }

    /// Values at every quadrature point.
    pub fn values_at_quad(&self, v: &SpatialVector) -> Vec<f64> {
        let t = &self.tables;
        self.sample_elementwise(v, |c| {
            Self::flatten(&(&t.values * c * t.values.transpose()))
        })
    }

    /// Gradients at every quadrature point.
    pub fn gradients_at_quad(&self, v: &SpatialVector) -> Vec<[f64; 2]> {
        let t = &self.tables;
        let sx = 2.0 / self.mesh.hx();
        let sy = 2.0 / self.mesh.hy();
        self.sample_elementwise(v, |c| {
            let gx = &t.d1 * c * t.values.transpose() * sx;
            let gy = &t.values * c * t.d1.transpose() * sy;
            gx.iter().zip(gy.iter()).map(|(&a, &b)| [a, b]).collect()
        })
    }

    /// Elementwise Laplacian at every quadrature point.
    pub fn laplacians_at_quad(&self, v: &SpatialVector) -> Vec<f64> {
        let t = &self.tables;
        let sx = (2.0 / self.mesh.hx()).powi(2);
        let sy = (2.0 / self.mesh.hy()).powi(2);
        self.sample_elementwise(v, |c| {
            let l = &t.d2 * c * t.values.transpose() * sx + &t.values * c * t.d2.transpose() * sy;
            Self::flatten(&l)
        })
    }

    /// Samples a function at every quadrature point.
    pub fn sample_at_quad(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.quad_points.iter().map(|q| f(q.x, q.y)).collect()
    }

    /// `(g, φ_i)` for the interior basis, `g` given by its quadrature samples.
    pub fn integrate_against_basis(&self, samples: &[f64]) -> SpatialVector {
        self.integrate_elementwise(|e, nq| {
            let mut w = DMatrix::zeros(nq, nq);
            for (k, wk) in w.iter_mut().enumerate() {
                let idx = e * nq * nq + k;
                *wk = samples[idx] * self.quad_points[idx].weight;
            }
            self.tables.values.transpose() * w * &self.tables.values
        })
    }

    /// `(g, ∇φ_i)` for the interior basis, `g` given by its quadrature samples.
    pub fn integrate_against_gradients(&self, samples: &[[f64; 2]]) -> SpatialVector {
        let sx = 2.0 / self.mesh.hx();
        let sy = 2.0 / self.mesh.hy();
        let t = &self.tables;
        self.integrate_elementwise(|e, nq| {
            let mut wx = DMatrix::zeros(nq, nq);
            let mut wy = DMatrix::zeros(nq, nq);
            for k in 0..nq * nq {
                let idx = e * nq * nq + k;
                let w = self.quad_points[idx].weight;
                wx[k] = samples[idx][0] * w * sx;
                wy[k] = samples[idx][1] * w * sy;
            }
            t.d1.transpose() * wx * &t.values + t.values.transpose() * wy * &t.d1
        })
    }

    fn integrate_elementwise(&self, local: impl Fn(usize, usize) -> DMatrix<f64>) -> SpatialVector {
        assert_eq!(
            self.points_per_element * self.mesh.num_elements(),
            self.quad_points.len()
        );
        let nq = self.tables.values.nrows();
        let np = self.degree + 1;
        let mut out = DVector::zeros(self.dim());
        for ey in 0..self.mesh.ny() {
            for ex in 0..self.mesh.nx() {
                let e = ex + self.mesh.nx() * ey;
                let c = local(e, nq);
                let nodes = self.element_nodes(ex, ey);
                for a in 0..np * np {
                    if let Some(k) = self.dof_of_node[nodes[a]] {
                        out[k] += c[(a % np, a / np)];
                    }
                }
            }
        }
        out
    }

    /// `(f, φ_i)` for the interior basis.
    pub fn load_vector(&self, f: impl Fn(f64, f64) -> f64) -> SpatialVector {
        self.integrate_against_basis(&self.sample_at_quad(f))
    }

    pub fn solve_mass(&self, b: &SpatialVector) -> Result<SpatialVector> {
        self.checked_solve(self.mass_factor.as_ref(), &self.mass, b, "mass")
    }

    pub fn solve_stiffness(&self, b: &SpatialVector) -> Result<SpatialVector> {
        self.checked_solve(
            self.stiffness_factor.as_ref(),
            &self.stiffness,
            b,
            "stiffness",
        )
    }

    fn checked_solve(
        &self,
        factor: Option<&SparseCholesky>,
        matrix: &CsrMatrix,
        b: &SpatialVector,
        what: &str,
    ) -> Result<SpatialVector> {
        self.check_len(b);
        let Some(factor) = factor else {
            return Ok(DVector::zeros(0));
        };
        let x = factor.solve(b);
        let residual = (matrix.mul_vec(&x) - b).norm();
        if !x.iter().all(|v| v.is_finite())
            || residual > SOLVE_RESIDUAL_TOL * b.norm().max(f64::MIN_POSITIVE)
        {
            return Err(Error::Solver(format!("{what} solve residual {residual:e}")));
        }
        Ok(x)
    }

    /// L² projection onto the discrete space.
    pub fn l2_project(&self, f: impl Fn(f64, f64) -> f64) -> Result<SpatialVector> {
        self.solve_mass(&self.load_vector(f))
    }

    /// Elliptic (Ritz) projection given the gradient of the target.
    pub fn elliptic_project(&self, grad: impl Fn(f64, f64) -> [f64; 2]) -> Result<SpatialVector> {
        let samples: Vec<[f64; 2]> = self.quad_points.iter().map(|q| grad(q.x, q.y)).collect();
        self.solve_stiffness(&self.integrate_against_gradients(&samples))
    }

    /// Interpolant at the interior nodes.
    pub fn nodal_interpolant(&self, f: impl Fn(f64, f64) -> f64) -> SpatialVector {
        DVector::from_iterator(
            self.dim(),
            self.node_of_dof.iter().map(|&n| {
                let (x, y) = self.node_coords(n);
                f(x, y)
            }),
        )
    }

    pub fn node_coords(&self, node: usize) -> (f64, f64) {
        let (gx, gy) = (node % self.nodes_x, node / self.nodes_x);
        let p = self.degree as f64;
        (
            self.mesh.x_range().0 + gx as f64 * self.mesh.hx() / p,
            self.mesh.y_range().0 + gy as f64 * self.mesh.hy() / p,
        )
    }

    /// Coordinates of each interior degree of freedom.
    pub fn dof_coords(&self) -> Vec<(f64, f64)> {
        self.node_of_dof
            .iter()
            .map(|&n| self.node_coords(n))
            .collect()
    }

    fn reference_position(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let (ex, ey) = self.mesh.locate(x, y);
        let x0 = self.mesh.x_range().0 + ex as f64 * self.mesh.hx();
        let y0 = self.mesh.y_range().0 + ey as f64 * self.mesh.hy();
        let xi = 2.0 * (x - x0) / self.mesh.hx() - 1.0;
        let eta = 2.0 * (y - y0) / self.mesh.hy() - 1.0;
        (ex, ey, xi, eta)
    }

    /// Point evaluation of a finite element function.
    pub fn eval_at(&self, v: &SpatialVector, x: f64, y: f64) -> f64 {
        self.check_len(v);
        let (ex, ey, xi, eta) = self.reference_position(x, y);
        let c = self.local_coeffs(v, ex, ey);
        (self.basis.values(xi).transpose() * c * self.basis.values(eta))[0]
    }

    pub fn broken_laplacian<'a>(&'a self, v: &SpatialVector) -> BrokenLaplacian<'a> {
        self.check_len(v);
        BrokenLaplacian {
            space: self,
            coeffs: v.clone(),
        }
    }

    pub fn l2_norm_of_samples(&self, samples: &[f64]) -> f64 {
        self.quad_points
            .iter()
            .zip(samples)
            .map(|(q, v)| q.weight * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn h1_semi_of_samples(&self, samples: &[[f64; 2]]) -> f64 {
        self.quad_points
            .iter()
            .zip(samples)
            .map(|(q, g)| q.weight * (g[0] * g[0] + g[1] * g[1]))
            .sum::<f64>()
            .sqrt()
    }

    pub fn spatial_norms(&self, v: &SpatialVector) -> SpatialNorms {
        SpatialNorms {
            l2: self.l2_norm_of_samples(&self.values_at_quad(v)),
            h1_semi: self.h1_semi_of_samples(&self.gradients_at_quad(v)),
        }
    }

    pub fn function_norms(
        &self,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> [f64; 2],
    ) -> SpatialNorms {
        let grads: Vec<[f64; 2]> = self.quad_points.iter().map(|q| grad(q.x, q.y)).collect();
        SpatialNorms {
            l2: self.l2_norm_of_samples(&self.sample_at_quad(f)),
            h1_semi: self.h1_semi_of_samples(&grads),
        }
    }

    /// `sqrt(vᵀ M v)`, the L² norm of the finite element function.
    pub fn mass_norm(&self, v: &SpatialVector) -> f64 {
        self.mass.quadratic_form(v).max(0.0).sqrt()
    }

    /// `sqrt(vᵀ K v)`, the H¹ seminorm of the finite element function.
    pub fn energy_norm(&self, v: &SpatialVector) -> f64 {
        self.stiffness.quadratic_form(v).max(0.0).sqrt()
    }

    pub fn mass_inner(&self, u: &SpatialVector, v: &SpatialVector) -> f64 {
        u.dot(&self.mass.mul_vec(v))
    }

    pub fn mesh(&self) -> &RectMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_of_dof.is_empty()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn quad_points(&self) -> &[QuadPoint] {
        &self.quad_points
    }
}

/// Elementwise Laplacian of a finite element function; face terms are dropped.
#[derive(Debug, Clone)]
pub struct BrokenLaplacian<'a> {
    space: &'a SpatialSpace,
    coeffs: SpatialVector,
}

impl BrokenLaplacian<'_> {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let s = self.space;
        let (ex, ey, xi, eta) = s.reference_position(x, y);
        let c = s.local_coeffs(&self.coeffs, ex, ey);
        let sx = (2.0 / s.mesh.hx()).powi(2);
        let sy = (2.0 / s.mesh.hy()).powi(2);
        let (vx, vy) = (s.basis.values(xi), s.basis.values(eta));
        let (dx, dy) = (
            s.basis.second_derivatives(xi),
            s.basis.second_derivatives(eta),
        );
        sx * (dx.transpose() * &c * &vy)[0] + sy * (vx.transpose() * &c * &dy)[0]
    }

    pub fn at_quad(&self) -> Vec<f64> {
        self.space.laplacians_at_quad(&self.coeffs)
    }

    pub fn l2_norm(&self) -> f64 {
        self.space.l2_norm_of_samples(&self.at_quad())
    }
}
