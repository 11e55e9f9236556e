//! C¹-in-time reconstruction of a slab polynomial.
//!
//! Given `V` of degree `p` on `I = (a, b)` and the incoming derivative `g`,
//! the reconstruction `Û` has degree `p + 1` and satisfies
//!
//! * `(Û'', q) = (V'', q) + ([V'](a), q(a))` for every `q` of degree `p − 1`,
//! * `Û(a) = V(a)` and `Û'(a) = g`.
//!
//! It then also matches `V` and `V'` at `b`, so the reconstructions of
//! consecutive slabs glue into a C¹ function.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::slab::SlabSolution;
use crate::spacefem::SpatialSpace;
use crate::timebasis::{
    gauss_legendre, legendre_table, reconstruction_constants, VectorTimePolynomial,
};

/// A norm on the coefficient vectors of the spatial unknowns.
pub trait SpatialNorm {
    fn norm(&self, v: &DVector<f64>) -> f64;
}

/// Plain Euclidean norm, used for abstract systems.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl SpatialNorm for Euclidean {
    fn norm(&self, v: &DVector<f64>) -> f64 {
        v.norm()
    }
}

impl SpatialNorm for SpatialSpace {
    fn norm(&self, v: &DVector<f64>) -> f64 {
        self.mass_norm(v)
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructedSlab {
    poly: VectorTimePolynomial,
    jump: DVector<f64>,
}

impl ReconstructedSlab {
    pub fn poly(&self) -> &VectorTimePolynomial {
        &self.poly
    }

    /// `V'(a⁺) − g`, the derivative jump that drove the reconstruction.
    pub fn jump(&self) -> &DVector<f64> {
        &self.jump
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }
}

/// Reconstructs `v` given the derivative `prev_deriv` arriving from the past.
pub fn reconstruct_slab(
    v: &VectorTimePolynomial,
    prev_deriv: &DVector<f64>,
) -> Result<ReconstructedSlab> {
    let p = v.degree();
    if p < 2 {
        return Err(invalid(format!("reconstruction needs degree ≥ 2, got {p}")));
    }
    if prev_deriv.len() != v.dim() {
        return Err(invalid("incoming derivative has wrong dimension"));
    }
    let iv = *v.interval();
    let scale = iv.scale();
    let n = p + 2;
    let rule = gauss_legendre(2 * p + 3)?;
    // moments ∫ L_k'' L_i dξ on the reference interval
    let mut moments = DMatrix::zeros(p, n);
    for (&xi, &w) in rule.nodes().iter().zip(rule.weights()) {
        let t = legendre_table(p + 1, xi);
        for i in 0..p {
            for k in 0..n {
                moments[(i, k)] += w * t.d2[k] * t.values[i];
            }
        }
    }
    let left = legendre_table(p + 1, -1.0);
    let mut system = DMatrix::zeros(n, n);
    system.rows_mut(0, p).copy_from(&(&moments * scale));
    for k in 0..n {
        system[(p, k)] = left.values[k];
        system[(p + 1, k)] = scale * left.d1[k];
    }

    let value_left = v.eval(iv.left());
    let jump = v.derivative_at(iv.left()) - prev_deriv;
    let v_modes = v.modes();
    let mut rhs = DMatrix::zeros(n, v.dim());
    let v_moments = moments.columns(0, p + 1) * v_modes * scale;
    for i in 0..p {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let row = v_moments.row(i) + jump.transpose() * sign;
        rhs.row_mut(i).copy_from(&row);
    }
    rhs.row_mut(p).copy_from(&value_left.transpose());
    rhs.row_mut(p + 1).copy_from(&prev_deriv.transpose());

    let modes = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular reconstruction system".into()))?;
    Ok(ReconstructedSlab {
        poly: VectorTimePolynomial::new(iv, modes)?,
        jump,
    })
}

/// Reconstructs every slab of a computed solution.
pub fn reconstruct_solution(sol: &SlabSolution) -> Result<Vec<ReconstructedSlab>> {
    (0..sol.num_slabs())
        .map(|n| reconstruct_slab(sol.slab(n), &sol.incoming_derivative(n)))
        .collect()
}

/// Both sides of the three reconstruction identities, all squared norms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityReport {
    /// `‖(V − Û)'‖²` in `L²(I)` and `τ c₁² ‖j‖²`.
    pub lhs1: f64,
    pub rhs1: f64,
    /// `‖(V − Û)'‖²` in `L∞(I)` and `‖j‖²`.
    pub lhs2: f64,
    pub rhs2: f64,
    /// `‖V − Û‖²` in `L²(I)` and the bound `τ³ c₂² ‖j‖²`.
    pub lhs3: f64,
    pub rhs3: f64,
}

pub fn reconstruction_identities(
    v: &VectorTimePolynomial,
    rec: &ReconstructedSlab,
    norm: &impl SpatialNorm,
) -> Result<IdentityReport> {
    let p = v.degree();
    let iv = *v.interval();
    let tau = iv.length();
    let (c1_sq, c2_sq, _) = reconstruction_constants(p)?;
    let diff = v.sub(rec.poly())?;
    let ddiff = diff.derivative();
    let rule = gauss_legendre(2 * (p + 1) + 3)?;
    let (mut lhs1, mut lhs3) = (0.0, 0.0);
    for (t, w) in rule.mapped(&iv) {
        lhs1 += w * norm.norm(&ddiff.eval(t)).powi(2);
        lhs3 += w * norm.norm(&diff.eval(t)).powi(2);
    }
    let samples = 2 * p + 3;
    let lhs2 = (0..samples)
        .map(|k| iv.left() + tau * k as f64 / (samples - 1) as f64)
        .map(|t| norm.norm(&ddiff.eval(t)).powi(2))
        .fold(0.0, f64::max);
    let j2 = norm.norm(rec.jump()).powi(2);
    Ok(IdentityReport {
        lhs1,
        rhs1: tau * c1_sq * j2,
        lhs2,
        rhs2: j2,
        lhs3,
        rhs3: tau.powi(3) * c2_sq * j2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timebasis::{Interval, TimePolynomial};
    use approx::assert_relative_eq;

    fn scalar_poly(iv: Interval, f: impl Fn(f64) -> f64, degree: usize) -> VectorTimePolynomial {
        let modal = crate::timebasis::project_l2(&iv, degree, f);
        VectorTimePolynomial::new(
            iv,
            DMatrix::from_column_slice(degree + 1, 1, modal.coeffs()),
        )
        .unwrap()
    }

    fn one(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn zero_jump_reproduces_v() {
        let iv = Interval::new(0.5, 1.25).unwrap();
        let v = scalar_poly(iv, |t| t * t * t - t, 3);
        let g = v.derivative_at(0.5);
        let rec = reconstruct_slab(&v, &g).unwrap();
        let diff = v.sub(rec.poly()).unwrap();
        assert!(diff.modes().amax() < 1e-12);
        let r = reconstruction_identities(&v, &rec, &Euclidean).unwrap();
        assert!(r.lhs1 < 1e-24 && r.lhs2 < 1e-24 && r.lhs3 < 1e-24 && r.rhs1 == 0.0);
    }

    #[test]
    fn constant_with_zero_derivative() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let v = scalar_poly(iv, |_| 2.0, 2);
        let rec = reconstruct_slab(&v, &one(0.0)).unwrap();
        for k in 0..=4 {
            assert_relative_eq!(rec.poly().eval(k as f64 / 4.0)[0], 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadratic_example_against_direct_solve() {
        // V = t², g = −1, jump = 1 on (0, 1); oracle from a monomial-basis solve
        let iv = Interval::new(0.0, 1.0).unwrap();
        let v = scalar_poly(iv, |t| t * t, 2);
        let rec = reconstruct_slab(&v, &one(-1.0)).unwrap();
        // Û = c0 + c1 t + c2 t² + c3 t³ with Û(0)=0, Û'(0)=−1 and
        // ∫(2c2 + 6c3 t) q = ∫2q + q(0) for q = 1, t
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 1.0]);
        let c = m.lu().solve(&b).unwrap();
        for k in 0..=8 {
            let t = k as f64 / 8.0;
            let oracle = -t + c[0] * t * t + c[1] * t * t * t;
            assert_relative_eq!(rec.poly().eval(t)[0], oracle, epsilon = 1e-12);
        }
        let r = reconstruction_identities(&v, &rec, &Euclidean).unwrap();
        let fine = gauss_legendre(12).unwrap();
        let direct_lhs1 = fine.mapped(&iv).map(|(t, w)| {
            let d = 2.0 * t - (-1.0 + 2.0 * c[0] * t + 3.0 * c[1] * t * t);
            w * d * d
        });
        assert_relative_eq!(r.lhs1, direct_lhs1.sum::<f64>(), max_relative = 1e-12);
        assert_relative_eq!(r.lhs1, r.rhs1, max_relative = 1e-12);
        assert_relative_eq!(r.lhs2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn right_end_gluing_and_orthogonality() {
        for p in 2..=7 {
            let iv = Interval::new(0.3, 0.3 + 0.17 * p as f64).unwrap();
            let modes = DMatrix::from_fn(p + 1, 2, |k, j| ((k * 5 + j * 3) % 7) as f64 - 3.0);
            let v = VectorTimePolynomial::new(iv, modes).unwrap();
            let g = DVector::from_vec(vec![0.7, -1.3]);
            let rec = reconstruct_slab(&v, &g).unwrap();
            let b = iv.right();
            assert!((rec.poly().eval(b) - v.eval(b)).amax() < 1e-11 * v.eval(b).amax().max(1.0));
            let dv = v.derivative_at(b);
            assert!((rec.poly().derivative_at(b) - &dv).amax() < 1e-11 * dv.amax().max(1.0));
            let diff = v.sub(rec.poly()).unwrap();
            let rule = gauss_legendre(2 * p + 6).unwrap();
            for i in 0..p {
                let q = TimePolynomial::new(
                    iv,
                    (0..=i).map(|k| if k == i { 1.0 } else { 0.0 }).collect(),
                )
                .unwrap();
                let r: DVector<f64> = rule.mapped(&iv).fold(DVector::zeros(2), |acc, (t, w)| {
                    acc + diff.eval(t) * (w * q.second_derivative_at(t))
                });
                assert!(
                    r.amax() < 1e-10 * diff.modes().amax().max(1.0),
                    "p={p} i={i}"
                );
            }
        }
    }

    #[test]
    fn rejects_low_degree() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let v = VectorTimePolynomial::zeros(iv, 1, 1);
        assert!(reconstruct_slab(&v, &one(0.0)).is_err());
    }
}
