//! Manufactured solutions on `(-1, 1)²` and the error measures of the
//! convergence studies.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::slab::{ProblemData, SlabSolution};
use crate::spacefem::SpatialSpace;
use crate::timebasis::gauss_legendre;

/// Exact solution used to measure errors.
pub trait ExactSolution {
    fn value(&self, x: f64, y: f64, t: f64) -> f64;
    fn time_derivative(&self, x: f64, y: f64, t: f64) -> f64;
    fn gradient(&self, x: f64, y: f64, t: f64) -> [f64; 2];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    /// `(1−x²)(1−y²) cos 4t`.
    Smooth,
    /// `(1−x²)(1−y²) t^α`, `α > 1.5`.
    PowerLaw { alpha: f64 },
    /// `sin(πkx) sin(πly) cos(ωπt)`.
    Eigenmode {
        x_mode: u32,
        y_mode: u32,
        omega: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    kind: CaseKind,
}

fn bubble(x: f64, y: f64) -> f64 {
    (1.0 - x * x) * (1.0 - y * y)
}

fn bubble_grad(x: f64, y: f64) -> [f64; 2] {
    [-2.0 * x * (1.0 - y * y), -2.0 * y * (1.0 - x * x)]
}

fn bubble_laplacian(x: f64, y: f64) -> f64 {
    -2.0 * (1.0 - y * y) - 2.0 * (1.0 - x * x)
}

pub fn make_case(kind: CaseKind) -> Result<ManufacturedCase> {
    match kind {
        CaseKind::Smooth => {}
        CaseKind::PowerLaw { alpha } => {
            if !(alpha > 1.5) || !alpha.is_finite() {
                return Err(invalid(format!(
                    "power-law exponent must exceed 1.5, got {alpha}"
                )));
            }
        }
        CaseKind::Eigenmode {
            x_mode,
            y_mode,
            omega,
        } => {
            if x_mode == 0 || y_mode == 0 {
                return Err(invalid("eigenmode indices must be at least 1"));
            }
            if !omega.is_finite() {
                return Err(invalid("eigenmode frequency must be finite"));
            }
        }
    }
    Ok(ManufacturedCase { kind })
}

impl ManufacturedCase {
    pub fn kind(&self) -> CaseKind {
        self.kind
    }

    /// Temporal factor `g` and its first two derivatives for separable cases.
    fn time_factor(&self, t: f64) -> (f64, f64, f64) {
        match self.kind {
            CaseKind::Smooth => (
                (4.0 * t).cos(),
                -4.0 * (4.0 * t).sin(),
                -16.0 * (4.0 * t).cos(),
            ),
            CaseKind::PowerLaw { alpha } => (
                t.powf(alpha),
                alpha * t.powf(alpha - 1.0),
                alpha * (alpha - 1.0) * t.powf(alpha - 2.0),
            ),
            CaseKind::Eigenmode { omega, .. } => {
                let w = omega * PI;
                ((w * t).cos(), -w * (w * t).sin(), -w * w * (w * t).cos())
            }
        }
    }

    fn space_factor(&self, x: f64, y: f64) -> (f64, [f64; 2], f64) {
        match self.kind {
            CaseKind::Smooth | CaseKind::PowerLaw { .. } => {
                (bubble(x, y), bubble_grad(x, y), bubble_laplacian(x, y))
            }
            CaseKind::Eigenmode { x_mode, y_mode, .. } => {
                let (kx, ky) = (PI * x_mode as f64, PI * y_mode as f64);
                let s = (kx * x).sin() * (ky * y).sin();
                (
                    s,
                    [
                        kx * (kx * x).cos() * (ky * y).sin(),
                        ky * (kx * x).sin() * (ky * y).cos(),
                    ],
                    -(kx * kx + ky * ky) * s,
                )
            }
        }
    }

    pub fn second_time_derivative(&self, x: f64, y: f64, t: f64) -> f64 {
        self.space_factor(x, y).0 * self.time_factor(t).2
    }

    pub fn laplacian(&self, x: f64, y: f64, t: f64) -> f64 {
        self.space_factor(x, y).2 * self.time_factor(t).0
    }

    /// `f = u'' − Δu`, in closed form.
    pub fn source(&self, x: f64, y: f64, t: f64) -> f64 {
        let (g, _, g2) = self.time_factor(t);
        match self.kind {
            CaseKind::Smooth | CaseKind::PowerLaw { .. } => {
                bubble(x, y) * g2 - bubble_laplacian(x, y) * g
            }
            CaseKind::Eigenmode {
                x_mode,
                y_mode,
                omega,
            } => {
                let k2 = (x_mode * x_mode + y_mode * y_mode) as f64;
                (PI * PI * k2 - omega * omega * PI * PI) * self.space_factor(x, y).0 * g
            }
        }
    }

    /// Problem data with the exact source and initial conditions.
    pub fn problem(&self, final_time: f64) -> ProblemData {
        let c = *self;
        ProblemData {
            source: Arc::new(move |x, y, t| c.source(x, y, t)),
            initial_value: Arc::new(move |x, y| c.value(x, y, 0.0)),
            initial_value_grad: Arc::new(move |x, y| c.gradient(x, y, 0.0)),
            initial_velocity: Arc::new(move |x, y| c.time_derivative(x, y, 0.0)),
            final_time,
        }
    }
}

impl ExactSolution for ManufacturedCase {
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self.space_factor(x, y).0 * self.time_factor(t).0
    }

    fn time_derivative(&self, x: f64, y: f64, t: f64) -> f64 {
        self.space_factor(x, y).0 * self.time_factor(t).1
    }

    fn gradient(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let g = self.space_factor(x, y).1;
        let a = self.time_factor(t).0;
        [g[0] * a, g[1] * a]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorBundle {
    /// `maxₙ ‖e'‖_{L∞(Iₙ;L²)}`.
    pub max_w1inf_l2: f64,
    /// `maxₙ |e|_{L∞(Iₙ;H¹)}`.
    pub max_linf_h1: f64,
    /// `|e|_{L²(0,T;H¹)}`.
    pub l2_h1: f64,
    /// `‖e'‖_{L²(0,T;L²)}`.
    pub h1_l2l2: f64,
    /// `‖e‖_{L∞(0,T;L²)}`.
    pub linf_l2: f64,
    /// `(Σ ‖[U'](tₙ₋₁)‖²)^{1/2}`.
    pub jump: f64,
}

struct PointErrors {
    value_l2: f64,
    deriv_l2: f64,
    grad_h1: f64,
}

fn errors_at(
    sol: &SlabSolution,
    space: &SpatialSpace,
    exact: &(impl ExactSolution + ?Sized),
    n: usize,
    t: f64,
) -> PointErrors {
    let slab = sol.slab(n);
    let values = space.values_at_quad(&slab.eval(t));
    let derivs = space.values_at_quad(&slab.derivative_at(t));
    let grads = space.gradients_at_quad(&slab.eval(t));
    let qp = space.quad_points();
    let ev: Vec<f64> = qp
        .iter()
        .zip(&values)
        .map(|(q, v)| exact.value(q.x, q.y, t) - v)
        .collect();
    let ed: Vec<f64> = qp
        .iter()
        .zip(&derivs)
        .map(|(q, v)| exact.time_derivative(q.x, q.y, t) - v)
        .collect();
    let eg: Vec<[f64; 2]> = qp
        .iter()
        .zip(&grads)
        .map(|(q, g)| {
            let e = exact.gradient(q.x, q.y, t);
            [e[0] - g[0], e[1] - g[1]]
        })
        .collect();
    PointErrors {
        value_l2: space.l2_norm_of_samples(&ev),
        deriv_l2: space.l2_norm_of_samples(&ed),
        grad_h1: space.h1_semi_of_samples(&eg),
    }
}

/// All error measures; `L∞` in time at `2p+3` equispaced points per interval,
/// `L²` in time by Gauss quadrature of order `2p+3`.
pub fn compute_errors(
    sol: &SlabSolution,
    space: &SpatialSpace,
    exact: &(impl ExactSolution + ?Sized),
) -> Result<ErrorBundle> {
    compute_errors_with_sampling(sol, space, exact, |p| 2 * p + 3)
}

/// As [`compute_errors`] with a custom number of `L∞` samples per interval.
pub fn compute_errors_with_sampling(
    sol: &SlabSolution,
    space: &SpatialSpace,
    exact: &(impl ExactSolution + ?Sized),
    samples: impl Fn(usize) -> usize,
) -> Result<ErrorBundle> {
    let grid = sol.grid();
    let mut out = ErrorBundle::default();
    let (mut l2_h1, mut h1_l2l2, mut jump) = (0.0, 0.0, 0.0);
    for n in 0..grid.num_intervals() {
        let p = grid.degree(n);
        let iv = grid.interval(n);
        let k = samples(p).max(2);
        for i in 0..k {
            let t = iv.left() + iv.length() * i as f64 / (k - 1) as f64;
            let e = errors_at(sol, space, exact, n, t);
            out.max_w1inf_l2 = out.max_w1inf_l2.max(e.deriv_l2);
            out.max_linf_h1 = out.max_linf_h1.max(e.grad_h1);
            out.linf_l2 = out.linf_l2.max(e.value_l2);
        }
        let rule = gauss_legendre(2 * p + 3)?;
        for (t, w) in rule.mapped(&iv) {
            let e = errors_at(sol, space, exact, n, t);
            l2_h1 += w * e.grad_h1 * e.grad_h1;
            h1_l2l2 += w * e.deriv_l2 * e.deriv_l2;
        }
        jump += space.mass_norm(&sol.jump_at(n)?).powi(2);
    }
    out.l2_h1 = l2_h1.sqrt();
    out.h1_l2l2 = h1_l2l2.sqrt();
    out.jump = jump.sqrt();
    Ok(out)
}

fn check_positive(v: &[f64], what: &str) -> Result<()> {
    if v.len() < 2 {
        return Err(invalid(format!("need at least two {what}")));
    }
    if let Some(x) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(invalid(format!("{what} must be positive, got {x}")));
    }
    Ok(())
}

/// Successive rates `log(eᵢ₋₁/eᵢ) / log(hᵢ₋₁/hᵢ)`.
pub fn rate(errors: &[f64], params: &[f64]) -> Result<Vec<f64>> {
    check_positive(errors, "errors")?;
    check_positive(params, "parameters")?;
    if errors.len() != params.len() {
        return Err(invalid("errors and parameters differ in length"));
    }
    Ok(errors
        .windows(2)
        .zip(params.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Least-squares slope of `log e` against `log h`.
pub fn loglog_slope(params: &[f64], errors: &[f64]) -> Result<f64> {
    check_positive(errors, "errors")?;
    check_positive(params, "parameters")?;
    if errors.len() != params.len() {
        return Err(invalid("errors and parameters differ in length"));
    }
    let xs: Vec<f64> = params.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("parameters are all equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
