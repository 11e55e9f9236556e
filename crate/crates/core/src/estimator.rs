//! Explicit a posteriori bound for the `L∞(0,T;L²)` error.
//!
//! `η = η₁ + Σ η₂,ₙ` with
//!
//! * `η₁ = maxₙ τₙ (c₁c₂)^{1/2} ‖[U'](tₙ₋₁)‖`,
//! * `η₂,ₙ` built from the temporal projection defect of the broken Laplacian
//!   of `U` and the jump of its time derivative,
//!
//! plus the optional data oscillation `osc(f)`. Indices are 0-based.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::slab::{source_rule, ProblemData, SlabSolution, TimeGrid};
use crate::spacefem::SpatialSpace;
use crate::timebasis::{
    c1_squared, c2_squared, c3, c4, gauss_legendre, legendre_eval, legendre_table,
};

/// How the interval `m` closing the η₂ sum is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorMode {
    /// `m` is the last interval.
    #[default]
    Global,
    /// `m` is the interval where η₁ attains its maximum; η₂,ₙ vanishes past it
    /// and every `n ≤ m` uses the interior weights.
    Localized,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorOptions {
    pub mode: EstimatorMode,
    pub include_osc: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub m: usize,
    pub eta1: f64,
    pub eta1_argmax: usize,
    pub eta2: Vec<f64>,
    pub osc: Vec<f64>,
    /// `η₁ + Σ η₂,ₙ`.
    pub eta: f64,
    /// `δ_{m,n} η₁ + η₂,ₙ`.
    pub local: Vec<f64>,
    pub include_osc: bool,
}

impl EstimatorReport {
    pub fn osc_total(&self) -> f64 {
        self.osc.iter().sum()
    }

    /// `η`, plus `osc(f)` when requested.
    pub fn total(&self) -> f64 {
        if self.include_osc {
            self.eta + self.osc_total()
        } else {
            self.eta
        }
    }
}

fn eta1_weight(p: usize, tau: f64) -> Result<f64> {
    Ok(tau * (c1_squared(p)? * c2_squared(p)?).sqrt().sqrt())
}

/// `η₁` and the first interval attaining it.
pub fn eta1(sol: &SlabSolution, space: &SpatialSpace) -> Result<(f64, usize)> {
    let grid = sol.grid();
    let mut best = (0.0, 0);
    for n in 0..grid.num_intervals() {
        let value = eta1_weight(grid.degree(n), grid.tau(n))? * space.mass_norm(&sol.jump_at(n)?);
        if value > best.0 {
            best = (value, n);
        }
    }
    Ok(best)
}

/// Weights `(w_defect, w_jump)` of the two η₂,ₙ terms, `n ≤ m`.
fn eta2_weights(grid: &TimeGrid, n: usize, m: usize, mode: EstimatorMode) -> Result<(f64, f64)> {
    let p = grid.degree(n);
    let tau = grid.tau(n);
    let c2 = c2_squared(p)?.sqrt();
    if n < m || mode == EstimatorMode::Localized {
        let c4 = c4(p, grid.nodes()[m + 1], grid.nodes()[n], tau)?;
        Ok((2.0 / PI * tau * c3(p - 1), 2.0 / PI * tau.powi(3) * c2 * c4))
    } else {
        Ok((2.0 * tau, 2.0 * c2 * tau.powi(3)))
    }
}

fn osc_weight(grid: &TimeGrid, n: usize, m: usize) -> f64 {
    let tau = grid.tau(n);
    if n < m {
        2.0 * tau / PI * c3(grid.degree(n) - 1)
    } else {
        2.0 * tau
    }
}

/// `∫_{-1}^{1} |L_p|` by the Gauss rule of order `order`.
fn abs_legendre_integral(p: usize, order: usize) -> Result<f64> {
    Ok(gauss_legendre(order)?.integrate(|x| legendre_eval(p, x).abs()))
}

/// Time integral of `|L_p|` over an interval of length `tau`, with a warning
/// when doubling the rule changes the value noticeably.
fn defect_time_factor(p: usize, tau: f64) -> Result<f64> {
    let base = abs_legendre_integral(p, 2 * p + 3)?;
    let fine = abs_legendre_integral(p, 4 * p + 6)?;
    if (base - fine).abs() > 1e-6 * fine {
        log::debug!("L1 time quadrature for degree {p}: {base} vs doubled {fine}");
    }
    Ok(0.5 * tau * base)
}

/// `‖Δ(U − Π⁰U)‖_{L¹(Iₙ;L²)}` for slab `n`.
pub fn laplacian_defect_l1(sol: &SlabSolution, space: &SpatialSpace, n: usize) -> Result<f64> {
    let grid = sol.grid();
    let p = grid.degree(n);
    // U − Π⁰U is the top Legendre mode of the slab
    let top: DVector<f64> = sol.slab(n).modes().row(p).transpose();
    let lap = space.broken_laplacian(&top).l2_norm();
    Ok(lap * defect_time_factor(p, grid.tau(n))?)
}

/// `‖Δ[U'](tₙ₋₁)‖` with the broken Laplacian.
pub fn laplacian_jump(sol: &SlabSolution, space: &SpatialSpace, n: usize) -> Result<f64> {
    Ok(space.broken_laplacian(&sol.jump_at(n)?).l2_norm())
}

/// `η₂,ₙ` for `n = 0..=m`.
pub fn eta2_terms(
    sol: &SlabSolution,
    space: &SpatialSpace,
    m: usize,
    mode: EstimatorMode,
) -> Result<Vec<f64>> {
    let grid = sol.grid();
    if m >= grid.num_intervals() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: grid.num_intervals(),
        });
    }
    (0..=m)
        .map(|n| {
            let (wd, wj) = eta2_weights(grid, n, m, mode)?;
            Ok(wd * laplacian_defect_l1(sol, space, n)? + wj * laplacian_jump(sol, space, n)?)
        })
        .collect()
}

/// `‖f − Π⁰f‖_{L¹(Iₙ;L²)}`, projecting `f` in time at every spatial quadrature point.
pub fn source_defect_l1(
    data: &ProblemData,
    space: &SpatialSpace,
    grid: &TimeGrid,
    n: usize,
) -> Result<f64> {
    let p = grid.degree(n);
    let iv = grid.interval(n);
    let rule = source_rule(p, n)?;
    let f = &data.source;
    let samples: Vec<Vec<f64>> = rule
        .nodes()
        .iter()
        .map(|&xi| {
            let t = iv.from_reference(xi);
            space.sample_at_quad(|x, y| f(x, y, t))
        })
        .collect();
    let legendre: Vec<Vec<f64>> = rule
        .nodes()
        .iter()
        .map(|&xi| legendre_table(p - 1, xi).values.to_vec())
        .collect();
    let nspace = space.quad_points().len();
    let mut coeffs = vec![vec![0.0; nspace]; p];
    for (q, w) in rule.weights().iter().enumerate() {
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let scale = w * legendre[q][k] * (2 * k + 1) as f64 / 2.0;
            for (c, s) in ck.iter_mut().zip(&samples[q]) {
                *c += scale * s;
            }
        }
    }
    let mut total = 0.0;
    for (q, w) in rule.weights().iter().enumerate() {
        let defect: Vec<f64> = (0..nspace)
            .map(|i| samples[q][i] - (0..p).map(|k| coeffs[k][i] * legendre[q][k]).sum::<f64>())
            .collect();
        total += w * 0.5 * iv.length() * space.l2_norm_of_samples(&defect);
    }
    Ok(total)
}

/// `oscₙ(f)` for `n = 0..=m`.
pub fn osc_terms(
    data: &ProblemData,
    space: &SpatialSpace,
    grid: &TimeGrid,
    m: usize,
) -> Result<Vec<f64>> {
    if m >= grid.num_intervals() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: grid.num_intervals(),
        });
    }
    (0..=m)
        .map(|n| Ok(osc_weight(grid, n, m) * source_defect_l1(data, space, grid, n)?))
        .collect()
}

pub fn estimate(
    sol: &SlabSolution,
    space: &SpatialSpace,
    data: &ProblemData,
    options: EstimatorOptions,
) -> Result<EstimatorReport> {
    let grid = sol.grid();
    let n_int = grid.num_intervals();
    let (eta1, argmax) = eta1(sol, space)?;
    let m = match options.mode {
        EstimatorMode::Global => n_int - 1,
        EstimatorMode::Localized => argmax,
    };
    let mut eta2 = eta2_terms(sol, space, m, options.mode)?;
    eta2.resize(n_int, 0.0);
    let mut osc = if options.include_osc {
        osc_terms(data, space, grid, m)?
    } else {
        Vec::new()
    };
    osc.resize(n_int, 0.0);
    let local: Vec<f64> = eta2
        .iter()
        .enumerate()
        .map(|(n, e)| if n == m { e + eta1 } else { *e })
        .collect();
    Ok(EstimatorReport {
        m,
        eta1,
        eta1_argmax: argmax,
        eta: eta1 + eta2.iter().sum::<f64>(),
        eta2,
        osc,
        local,
        include_osc: options.include_osc,
    })
}

/// `κ = η / ‖e‖_{L∞(L²)}`.
pub fn effectivity(eta: f64, error: f64) -> Result<f64> {
    if !(error > f64::MIN_POSITIVE) {
        return Err(Error::DivisionByZero(format!(
            "effectivity with error {error:e}"
        )));
    }
    Ok(eta / error)
}
