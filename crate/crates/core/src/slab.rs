//! Slab-by-slab solution of the C⁰-in-time Petrov–Galerkin scheme.
//!
//! On each interval the trial space is spanned by Lagrange polynomials on
//! `p + 1` equispaced nodes (the first sitting at the left end, so continuity
//! is imposed by fixing its coefficient) and the test space by the first `p`
//! Legendre polynomials. The derivative jump at the left end is treated by
//! upwinding.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::spacefem::{SpatialSpace, SpatialVector};
use crate::sparse::{CsrMatrix, SparseLu};
use crate::timebasis::{
    gauss_legendre, graded_gauss_legendre, legendre_table, mu, Interval, LagrangeBasis,
    QuadratureRule, VectorTimePolynomial,
};

const SLAB_RESIDUAL_TOL: f64 = 1e-8;

/// Time nodes `0 = t_0 < … < t_N = T` and a polynomial degree per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    degrees: Vec<usize>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>, degrees: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("time grid needs at least one interval"));
        }
        if degrees.len() != nodes.len() - 1 {
            return Err(invalid(format!(
                "{} degrees for {} intervals",
                degrees.len(),
                nodes.len() - 1
            )));
        }
        if !nodes.iter().all(|t| t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time nodes must be finite and strictly increasing"));
        }
        if let Some(p) = degrees.iter().find(|&&p| p < 2) {
            return Err(invalid(format!("time degree {p} below 2")));
        }
        Ok(Self { nodes, degrees })
    }

    /// `n` intervals of equal length on `(0, final_time)`, all of degree `degree`.
    pub fn uniform(final_time: f64, n: usize, degree: usize) -> Result<Self> {
        if n == 0 || !(final_time > 0.0) {
            return Err(invalid(
                "uniform grid needs n ≥ 1 and a positive final time",
            ));
        }
        let nodes = (0..=n).map(|k| final_time * k as f64 / n as f64).collect();
        Self::new(nodes, vec![degree; n])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn num_intervals(&self) -> usize {
        self.degrees.len()
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().expect("nonempty grid")
    }

    pub fn interval(&self, n: usize) -> Interval {
        Interval::new(self.nodes[n], self.nodes[n + 1]).expect("validated grid")
    }

    pub fn tau(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.degrees[n]
    }

    pub fn max_tau(&self) -> f64 {
        (0..self.num_intervals())
            .map(|n| self.tau(n))
            .fold(0.0, f64::max)
    }

    pub fn min_tau(&self) -> f64 {
        (0..self.num_intervals())
            .map(|n| self.tau(n))
            .fold(f64::INFINITY, f64::min)
    }

    /// Interval containing `t`; `t ∈ (t_{n}, t_{n+1}]` maps to `n`, `t ≤ 0` to 0.
    pub fn locate(&self, t: f64) -> usize {
        let k = self.nodes.partition_point(|&s| s < t);
        k.saturating_sub(1).min(self.num_intervals() - 1)
    }

    /// Bisects every marked interval; both halves keep the parent's degree.
    pub fn bisect(&self, marked: &[usize]) -> Result<Self> {
        let mut flag = vec![false; self.num_intervals()];
        for &n in marked {
            *flag.get_mut(n).ok_or(Error::IndexOutOfRange {
                index: n,
                len: self.num_intervals(),
            })? = true;
        }
        let mut nodes = vec![self.nodes[0]];
        let mut degrees = Vec::new();
        for n in 0..self.num_intervals() {
            if flag[n] {
                nodes.push(0.5 * (self.nodes[n] + self.nodes[n + 1]));
                degrees.push(self.degrees[n]);
            }
            nodes.push(self.nodes[n + 1]);
            degrees.push(self.degrees[n]);
        }
        Self::new(nodes, degrees)
    }

    /// Total number of space-time unknowns for `dim` spatial unknowns.
    pub fn dofs(&self, dim: usize) -> usize {
        self.degrees.iter().sum::<usize>() * dim
    }
}

pub type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpatialGradFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Source, initial data and final time of `u'' − Δu = f`.
#[derive(Clone)]
pub struct ProblemData {
    pub source: SpaceTimeFn,
    pub initial_value: SpatialFn,
    pub initial_value_grad: SpatialGradFn,
    pub initial_velocity: SpatialFn,
    pub final_time: f64,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    pub fn zero(final_time: f64) -> Self {
        Self {
            source: Arc::new(|_, _, _| 0.0),
            initial_value: Arc::new(|_, _| 0.0),
            initial_value_grad: Arc::new(|_, _| [0.0, 0.0]),
            initial_velocity: Arc::new(|_, _| 0.0),
            final_time,
        }
    }
}

/// Abstract `M u'' + K u = F` system; the spatial FE space is the main instance.
pub trait SecondOrderSystem {
    fn dim(&self) -> usize;
    fn mass(&self) -> &CsrMatrix;
    fn stiffness(&self) -> &CsrMatrix;
}

impl SecondOrderSystem for SpatialSpace {
    fn dim(&self) -> usize {
        SpatialSpace::dim(self)
    }

    fn mass(&self) -> &CsrMatrix {
        SpatialSpace::mass(self)
    }

    fn stiffness(&self) -> &CsrMatrix {
        SpatialSpace::stiffness(self)
    }
}

/// Explicitly given mass and stiffness matrices.
#[derive(Debug, Clone)]
pub struct MatrixSystem {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
}

impl SecondOrderSystem for MatrixSystem {
    fn dim(&self) -> usize {
        self.mass.nrows()
    }

    fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }
}

/// Time coupling matrices of one slab: `A_ij` and `B_ij`, test index first.
#[derive(Debug, Clone)]
pub struct SlabTimeMatrices {
    pub second: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

impl SlabTimeMatrices {
    pub fn new(degree: usize, tau: f64) -> Result<Self> {
        if degree < 2 {
            return Err(invalid(format!("time degree {degree} below 2")));
        }
        let basis = LagrangeBasis::equispaced(degree);
        let rule = gauss_legendre(2 * degree + 3)?;
        let mut second = DMatrix::zeros(degree, degree + 1);
        let mut mass = DMatrix::zeros(degree, degree + 1);
        for (&xi, &w) in rule.nodes().iter().zip(rule.weights()) {
            let leg = legendre_table(degree - 1, xi);
            let phi = basis.values(xi);
            let phi2 = basis.second_derivatives(xi);
            for i in 0..degree {
                for j in 0..=degree {
                    second[(i, j)] += w * phi2[j] * leg.values[i];
                    mass[(i, j)] += w * phi[j] * leg.values[i];
                }
            }
        }
        let dphi_left = basis.derivatives(-1.0);
        for i in 0..degree {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            for j in 0..=degree {
                second[(i, j)] += dphi_left[j] * sign;
            }
        }
        Ok(Self {
            second: second * (2.0 / tau),
            mass: mass * (0.5 * tau),
        })
    }
}

/// The square linear system of one slab.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub matrix: CsrMatrix,
    pub rhs: DVector<f64>,
}

fn slab_matrix(system: &impl SecondOrderSystem, tm: &SlabTimeMatrices) -> CsrMatrix {
    let d = system.dim();
    let p = tm.second.nrows();
    let mut triplets = Vec::with_capacity(p * p * (system.mass().nnz() + system.stiffness().nnz()));
    for i in 0..p {
        for j in 1..=p {
            let (a, b) = (tm.second[(i, j)], tm.mass[(i, j)]);
            for (r, c, v) in system.mass().iter() {
                triplets.push((i * d + r, (j - 1) * d + c, a * v));
            }
            for (r, c, v) in system.stiffness().iter() {
                triplets.push((i * d + r, (j - 1) * d + c, b * v));
            }
        }
    }
    CsrMatrix::from_triplets(p * d, p * d, &triplets)
}

/// Time quadrature for the source on slab `n`.
///
/// The first slab uses a rule graded towards the initial time, where the
/// source may be weakly singular; the others use Gauss of order `2p + 3`.
pub fn source_rule(degree: usize, n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        graded_gauss_legendre((2 * degree + 3).max(15), 40, 0.5)
    } else {
        gauss_legendre(2 * degree + 3)
    }
}

fn slab_rhs(
    system: &impl SecondOrderSystem,
    tm: &SlabTimeMatrices,
    rule: &QuadratureRule,
    interval: &Interval,
    prev_value: &DVector<f64>,
    prev_deriv: &DVector<f64>,
    load: &dyn Fn(f64) -> DVector<f64>,
) -> Result<DVector<f64>> {
    let d = system.dim();
    let p = tm.second.nrows();
    let mut rhs = DVector::zeros(p * d);
    let m_prev_deriv = system.mass().mul_vec(prev_deriv);
    let m_prev = system.mass().mul_vec(prev_value);
    let k_prev = system.stiffness().mul_vec(prev_value);
    let loads: Vec<(DVector<f64>, Vec<f64>)> = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&xi, &w)| {
            let leg = legendre_table(p - 1, xi);
            let scaled = leg
                .values
                .iter()
                .map(|l| l * w * 0.5 * interval.length())
                .collect();
            (load(interval.from_reference(xi)), scaled)
        })
        .collect();
    for i in 0..p {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut block =
            &m_prev_deriv * sign - &m_prev * tm.second[(i, 0)] - &k_prev * tm.mass[(i, 0)];
        for (f, weights) in &loads {
            block.axpy(weights[i], f, 1.0);
        }
        rhs.rows_mut(i * d, d).copy_from(&block);
    }
    Ok(rhs)
}

/// Builds the system of slab `n` given `U(t_n)` and the left-limit `U'(t_n⁻)`.
pub fn assemble_slab_system(
    system: &impl SecondOrderSystem,
    grid: &TimeGrid,
    n: usize,
    prev_value: &DVector<f64>,
    prev_deriv: &DVector<f64>,
    load: &dyn Fn(f64) -> DVector<f64>,
) -> Result<SlabSystem> {
    if n >= grid.num_intervals() {
        return Err(Error::IndexOutOfRange {
            index: n,
            len: grid.num_intervals(),
        });
    }
    let tm = SlabTimeMatrices::new(grid.degree(n), grid.tau(n))?;
    Ok(SlabSystem {
        matrix: slab_matrix(system, &tm),
        rhs: slab_rhs(
            system,
            &tm,
            &source_rule(grid.degree(n), n)?,
            &grid.interval(n),
            prev_value,
            prev_deriv,
            load,
        )?,
    })
}

/// [`assemble_slab_system`] for the wave equation on a spatial FE space.
pub fn assemble_slab(
    n: usize,
    prev_value: &SpatialVector,
    prev_deriv: &SpatialVector,
    data: &ProblemData,
    space: &SpatialSpace,
    grid: &TimeGrid,
) -> Result<SlabSystem> {
    let load = spatial_load(data, space);
    assemble_slab_system(space, grid, n, prev_value, prev_deriv, &load)
}

fn spatial_load<'a>(
    data: &'a ProblemData,
    space: &'a SpatialSpace,
) -> impl Fn(f64) -> DVector<f64> + 'a {
    move |t| {
        let f = &data.source;
        space.load_vector(|x, y| f(x, y, t))
    }
}

/// Discrete initial data: elliptic projection of `u₀`, L² projection of `u₁`.
pub fn discretize_initial(
    data: &ProblemData,
    space: &SpatialSpace,
) -> Result<(SpatialVector, SpatialVector)> {
    let grad = &data.initial_value_grad;
    let vel = &data.initial_velocity;
    Ok((
        space.elliptic_project(|x, y| grad(x, y))?,
        space.l2_project(|x, y| vel(x, y))?,
    ))
}

/// Piecewise polynomial in time with values in `R^d`, continuous at the nodes.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    grid: TimeGrid,
    nodal: Vec<DMatrix<f64>>,
    slabs: Vec<VectorTimePolynomial>,
    initial_value: DVector<f64>,
    initial_velocity: DVector<f64>,
}

impl SlabSolution {
    /// Builds the solution from nodal blocks `(p_n + 1) × d`.
    pub fn from_nodal(
        grid: TimeGrid,
        nodal: Vec<DMatrix<f64>>,
        initial_value: DVector<f64>,
        initial_velocity: DVector<f64>,
    ) -> Result<Self> {
        if nodal.len() != grid.num_intervals() {
            return Err(invalid("one nodal block per interval required"));
        }
        let dim = initial_value.len();
        if initial_velocity.len() != dim {
            return Err(invalid("initial data dimension mismatch"));
        }
        let mut slabs = Vec::with_capacity(nodal.len());
        for (n, block) in nodal.iter().enumerate() {
            let p = grid.degree(n);
            if block.nrows() != p + 1 || block.ncols() != dim {
                return Err(invalid(format!("block {n} has wrong shape")));
            }
            let modes = LagrangeBasis::equispaced(p).nodal_to_modal(block);
            slabs.push(VectorTimePolynomial::new(grid.interval(n), modes)?);
        }
        Ok(Self {
            grid,
            nodal,
            slabs,
            initial_value,
            initial_velocity,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.initial_value.len()
    }

    pub fn num_slabs(&self) -> usize {
        self.slabs.len()
    }

    pub fn slab(&self, n: usize) -> &VectorTimePolynomial {
        &self.slabs[n]
    }

    pub fn slabs(&self) -> &[VectorTimePolynomial] {
        &self.slabs
    }

    pub fn nodal_block(&self, n: usize) -> &DMatrix<f64> {
        &self.nodal[n]
    }

    pub fn initial_value(&self) -> &DVector<f64> {
        &self.initial_value
    }

    pub fn initial_velocity(&self) -> &DVector<f64> {
        &self.initial_velocity
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        self.slabs[self.grid.locate(t)].eval(t)
    }

    /// Time derivative, taken from the interval containing `t` (left limit at nodes).
    pub fn derivative(&self, t: f64) -> DVector<f64> {
        self.slabs[self.grid.locate(t)].derivative_at(t)
    }

    /// `U'` approaching the left end of slab `n` from the past; `u_{1,h}` for `n = 0`.
    pub fn incoming_derivative(&self, n: usize) -> DVector<f64> {
        if n == 0 {
            self.initial_velocity.clone()
        } else {
            let prev = &self.slabs[n - 1];
            prev.derivative_at(prev.interval().right())
        }
    }

    /// `U'(t_n⁺) − U'(t_n⁻)` at the left node of slab `n`.
    pub fn jump_at(&self, n: usize) -> Result<DVector<f64>> {
        if n >= self.num_slabs() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.num_slabs(),
            });
        }
        let slab = &self.slabs[n];
        Ok(slab.derivative_at(slab.interval().left()) - self.incoming_derivative(n))
    }

    /// Multiplies every coefficient by `factor`, initial data included.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_nodal(
            self.grid.clone(),
            self.nodal.iter().map(|b| b * factor).collect(),
            &self.initial_value * factor,
            &self.initial_velocity * factor,
        )
        .expect("same shapes")
    }
}

/// Marches the abstract system slab by slab.
pub fn march_system(
    system: &impl SecondOrderSystem,
    grid: &TimeGrid,
    initial_value: DVector<f64>,
    initial_velocity: DVector<f64>,
    load: &dyn Fn(f64) -> DVector<f64>,
) -> Result<SlabSolution> {
    let d = system.dim();
    if initial_value.len() != d || initial_velocity.len() != d {
        return Err(invalid("initial data dimension mismatch"));
    }
    if d == 0 {
        let nodal = grid
            .degrees()
            .iter()
            .map(|&p| DMatrix::zeros(p + 1, 0))
            .collect();
        return SlabSolution::from_nodal(grid.clone(), nodal, initial_value, initial_velocity);
    }
    let mut factors: HashMap<(u64, usize), (SlabTimeMatrices, CsrMatrix, SparseLu)> =
        HashMap::new();
    let mut nodal = Vec::with_capacity(grid.num_intervals());
    let mut value = initial_value.clone();
    let mut deriv = initial_velocity.clone();
    for n in 0..grid.num_intervals() {
        let p = grid.degree(n);
        let tau = grid.tau(n);
        let wrap = |e: Error| Error::Slab {
            slab: n,
            source: Box::new(e),
        };
        let key = (tau.to_bits(), p);
        if let std::collections::hash_map::Entry::Vacant(e) = factors.entry(key) {
            let tm = SlabTimeMatrices::new(p, tau).map_err(wrap)?;
            let matrix = slab_matrix(system, &tm);
            let lu = SparseLu::new(&matrix).map_err(wrap)?;
            e.insert((tm, matrix, lu));
        }
        let (tm, matrix, lu) = &factors[&key];
        let rule = source_rule(p, n).map_err(wrap)?;
        let rhs =
            slab_rhs(system, tm, &rule, &grid.interval(n), &value, &deriv, load).map_err(wrap)?;
        let x = lu.solve(&rhs);
        let residual = (matrix.mul_vec(&x) - &rhs).norm();
        if !x.iter().all(|v| v.is_finite()) || residual > SLAB_RESIDUAL_TOL * rhs.norm().max(1e-300)
        {
            return Err(wrap(Error::Solver(format!("slab residual {residual:e}"))));
        }
        let mut block = DMatrix::zeros(p + 1, d);
        block.row_mut(0).copy_from(&value.transpose());
        for j in 1..=p {
            block
                .row_mut(j)
                .copy_from(&x.rows((j - 1) * d, d).transpose());
        }
        let poly = VectorTimePolynomial::new(
            grid.interval(n),
            LagrangeBasis::equispaced(p).nodal_to_modal(&block),
        )?;
        value = block.row(p).transpose();
        deriv = poly.derivative_at(grid.nodes()[n + 1]);
        log::trace!("slab {n} solved, residual {residual:e}");
        nodal.push(block);
    }
    SlabSolution::from_nodal(grid.clone(), nodal, initial_value, initial_velocity)
}

/// Solves the wave equation on `space × grid`.
pub fn march(data: &ProblemData, space: &SpatialSpace, grid: &TimeGrid) -> Result<SlabSolution> {
    let (u0h, u1h) = discretize_initial(data, space)?;
    let load = spatial_load(data, space);
    march_system(space, grid, u0h, u1h, &load)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub interval: usize,
    pub satisfied: bool,
}

/// Evaluates both sides of the discrete stability bound.
pub fn stability_check(
    sol: &SlabSolution,
    data: &ProblemData,
    space: &SpatialSpace,
) -> Result<StabilityReport> {
    let grid = sol.grid();
    let mut best = (0usize, -1.0f64);
    for n in 0..grid.num_intervals() {
        let slab = sol.slab(n);
        let iv = grid.interval(n);
        let samples = 2 * grid.degree(n) + 3;
        let (mut vel, mut grad) = (0.0f64, 0.0f64);
        for k in 0..samples {
            let t = iv.left() + iv.length() * k as f64 / (samples - 1) as f64;
            vel = vel.max(space.mass_norm(&slab.derivative_at(t)).powi(2));
            grad = grad.max(space.energy_norm(&slab.eval(t)).powi(2));
        }
        if vel + grad > best.1 {
            best = (n, vel + grad);
        }
    }
    let (m, peak) = best;
    let mu_m = mu(grid.degree(m))?;
    let mut jumps = 0.0;
    for n in 0..=m {
        jumps += space.mass_norm(&sol.jump_at(n)?).powi(2);
    }
    let lhs = mu_m * peak + 0.25 * jumps;

    let u0 = &data.initial_value;
    let u0g = &data.initial_value_grad;
    let u1 = &data.initial_velocity;
    let init = space
        .function_norms(|x, y| u0(x, y), |x, y| u0g(x, y))
        .h1_semi
        .powi(2)
        + space
            .function_norms(|x, y| u1(x, y), |_, _| [0.0, 0.0])
            .l2
            .powi(2);
    let t_m = grid.nodes()[m + 1];
    let mut source = 0.0;
    for n in 0..=m {
        let iv = grid.interval(n);
        let rule = source_rule(grid.degree(n), n)?;
        for (t, w) in rule.mapped(&iv) {
            let f = &data.source;
            source += w * space
                .l2_norm_of_samples(&space.sample_at_quad(|x, y| f(x, y, t)))
                .powi(2);
        }
    }
    let rhs = 0.5 * init + t_m / mu_m * source;
    Ok(StabilityReport {
        lhs,
        rhs,
        interval: m,
        satisfied: lhs <= rhs * (1.0 + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacefem::RectMesh;
    use approx::assert_relative_eq;

    fn scalar() -> MatrixSystem {
        MatrixSystem {
            mass: CsrMatrix::identity(1),
            stiffness: CsrMatrix::identity(1),
        }
    }

    fn one(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn grid_validation_and_bisection() {
        assert!(TimeGrid::new(vec![0.0], vec![]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0], vec![1]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0], vec![2]).is_err());
        let g = TimeGrid::uniform(1.0, 4, 3).unwrap();
        assert_eq!(g.locate(0.0), 0);
        assert_eq!(g.locate(0.25), 0);
        assert_eq!(g.locate(0.26), 1);
        assert_eq!(g.locate(1.0), 3);
        let b = g.bisect(&[0, 2]).unwrap();
        assert_eq!(b.num_intervals(), 6);
        assert_relative_eq!(b.nodes()[1], 0.125);
        assert_eq!(g.dofs(10), 120);
        assert!(g.bisect(&[4]).is_err());
    }

    #[test]
    fn system_dimensions() {
        let space = SpatialSpace::new(RectMesh::square(3).unwrap(), 2).unwrap();
        let grid = TimeGrid::uniform(1.0, 2, 3).unwrap();
        let z = DVector::zeros(space.dim());
        let s = assemble_slab(0, &z, &z, &ProblemData::zero(1.0), &space, &grid).unwrap();
        assert_eq!(s.matrix.nrows(), 3 * space.dim());
        assert_eq!(s.matrix.ncols(), 3 * space.dim());
        assert_eq!(s.rhs.amax(), 0.0);
    }

    #[test]
    fn scalar_oscillator_one_slab() {
        let grid = TimeGrid::new(vec![0.0, 0.1], vec![2]).unwrap();
        let sol = march_system(&scalar(), &grid, one(1.0), one(0.0), &|_| one(0.0)).unwrap();
        assert!((sol.eval(0.1)[0] - 0.1f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn polynomial_solution_is_reproduced() {
        // u = t³ + 2t solves u'' + u = 6t + t³ + 2t exactly in degree 3
        let grid = TimeGrid::uniform(1.0, 3, 3).unwrap();
        let sol = march_system(&scalar(), &grid, one(0.0), one(2.0), &|t| {
            one(t.powi(3) + 8.0 * t)
        })
        .unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            assert_relative_eq!(sol.eval(t)[0], t.powi(3) + 2.0 * t, epsilon = 1e-11);
        }
        for n in 0..3 {
            assert!(sol.jump_at(n).unwrap().amax() < 1e-10);
        }
    }

    #[test]
    fn continuity_and_jumps() {
        let grid = TimeGrid::uniform(2.0, 5, 2).unwrap();
        let sol = march_system(&scalar(), &grid, one(1.0), one(0.0), &|_| one(0.0)).unwrap();
        for n in 1..5 {
            let t = grid.nodes()[n];
            let left = sol.slab(n - 1).eval(t)[0];
            let right = sol.slab(n).eval(t)[0];
            assert!((left - right).abs() <= 1e-12 * left.abs().max(1.0));
            let jump = sol.jump_at(n).unwrap()[0];
            let direct = sol.slab(n).derivative_at(t)[0] - sol.slab(n - 1).derivative_at(t)[0];
            assert_relative_eq!(jump, direct, epsilon = 1e-14);
        }
        assert!(sol.jump_at(5).is_err());
    }

    #[test]
    fn zero_data_gives_zero_and_stability_holds() {
        let space = SpatialSpace::new(RectMesh::square(2).unwrap(), 2).unwrap();
        let grid = TimeGrid::uniform(1.0, 2, 2).unwrap();
        let data = ProblemData::zero(1.0);
        let sol = march(&data, &space, &grid).unwrap();
        assert!(sol.slabs().iter().all(|s| s.modes().amax() == 0.0));
        let r = stability_check(&sol, &data, &space).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.satisfied);
    }

    #[test]
    fn residual_of_variational_form() {
        let sys = MatrixSystem {
            mass: CsrMatrix::from_triplets(
                2,
                2,
                &[(0, 0, 2.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)],
            ),
            stiffness: CsrMatrix::from_triplets(
                2,
                2,
                &[(0, 0, 3.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)],
            ),
        };
        let load = |t: f64| DVector::from_vec(vec![t.sin(), 1.0 + t]);
        let grid = TimeGrid::new(vec![0.0, 0.3, 0.5, 0.9], vec![2, 4, 3]).unwrap();
        let u0 = DVector::from_vec(vec![1.0, -0.5]);
        let u1 = DVector::from_vec(vec![0.2, 0.1]);
        let sol = march_system(&sys, &grid, u0, u1, &load).unwrap();
        for n in 0..3 {
            let iv = grid.interval(n);
            let p = grid.degree(n);
            let rule = gauss_legendre(2 * p + 6).unwrap();
            let slab = sol.slab(n);
            let jump = sol.jump_at(n).unwrap();
            for i in 0..p {
                let psi = |t: f64| crate::timebasis::legendre_eval(i, iv.to_reference(t));
                let mut r = sys.mass.mul_vec(&jump) * psi(iv.left());
                let mut scale = r.norm();
                for (t, w) in rule.mapped(&iv) {
                    let term = sys.mass.mul_vec(&slab.second_derivative_at(t))
                        + sys.stiffness.mul_vec(&slab.eval(t))
                        - load(t);
                    scale += w * load(t).norm();
                    r += term * (w * psi(t));
                }
                assert!(
                    r.norm() <= 1e-9 * scale.max(1.0),
                    "slab {n} test {i}: {}",
                    r.norm()
                );
            }
        }
    }
}
