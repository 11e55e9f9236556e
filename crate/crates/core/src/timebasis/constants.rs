//! Explicit constants of the reconstruction estimates and of the discrete
//! stability bound, as functions of the temporal degree.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

fn require_degree_two(p: usize, what: &str) -> Result<()> {
    if p < 2 {
        return Err(invalid(format!(
            "{what} is defined for degree >= 2, got {p}"
        )));
    }
    Ok(())
}

/// `c₁(p)² = p / ((2p-1)(2p+1))`.
pub fn c1_squared(p: usize) -> Result<f64> {
    require_degree_two(p, "c1")?;
    let p = p as f64;
    Ok(p / ((2.0 * p - 1.0) * (2.0 * p + 1.0)))
}

/// `c₂(p)²`: `p / (4(p-2)(p-1)(2p-1)(2p+1))` for `p ≥ 3`, `2/(15π²)` for `p = 2`.
pub fn c2_squared(p: usize) -> Result<f64> {
    require_degree_two(p, "c2")?;
    if p == 2 {
        return Ok(2.0 / (15.0 * PI * PI));
    }
    let p = p as f64;
    Ok(0.25 * p / ((p - 2.0) * (p - 1.0) * (2.0 * p - 1.0) * (2.0 * p + 1.0)))
}

/// `c₃(p)`: `√π` for `p ≤ 2`, `1/(p-2)` otherwise.
pub fn c3(p: usize) -> f64 {
    if p <= 2 {
        PI.sqrt()
    } else {
        1.0 / (p - 2) as f64
    }
}

/// `(c₁², c₂², c₃)` for degree `p ≥ 2`.
pub fn reconstruction_constants(p: usize) -> Result<(f64, f64, f64)> {
    Ok((c1_squared(p)?, c2_squared(p)?, c3(p)))
}

/// The constant written `c₄(p-3)` in the estimator: `π|t_m - t_prev|/τ` for
/// `p = 2`, `c₃(p-3)` for `p ≥ 3`.
pub fn c4(p: usize, t_m: f64, t_prev: f64, tau: f64) -> Result<f64> {
    require_degree_two(p, "c4")?;
    if tau <= 0.0 {
        return Err(invalid(format!("time step must be positive, got {tau}")));
    }
    if p == 2 {
        Ok(PI * (t_m - t_prev).abs() / tau)
    } else {
        Ok(c3(p - 3))
    }
}

/// Stability weight `1 / (1024 p² (2p+1))`.
pub fn mu(p: usize) -> Result<f64> {
    require_degree_two(p, "mu")?;
    let p = p as f64;
    Ok(1.0 / (1024.0 * p * p * (2.0 * p + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values() {
        assert_eq!(c1_squared(2).unwrap(), 2.0 / 15.0);
        assert_eq!(c2_squared(2).unwrap(), 2.0 / (15.0 * PI * PI));
        assert_eq!(c3(2), PI.sqrt());
        assert_eq!(c1_squared(3).unwrap(), 3.0 / 35.0);
        assert!((c2_squared(3).unwrap() - 3.0 / 280.0).abs() < 1e-17);
        assert_eq!(c3(3), 1.0);
        assert_eq!(mu(2).unwrap(), 1.0 / 20480.0);
        assert_eq!(mu(3).unwrap(), 1.0 / 64512.0);
    }

    #[test]
    fn c4_branches() {
        assert!((c4(2, 1.0, 0.0, 0.2).unwrap() - 5.0 * PI).abs() < 1e-13);
        assert_eq!(c4(3, 0.7, 0.1, 0.3).unwrap(), PI.sqrt());
        assert_eq!(c4(5, 0.7, 0.1, 0.3).unwrap(), PI.sqrt());
        assert_eq!(c4(6, 0.7, 0.1, 0.3).unwrap(), 1.0);
        assert!(c4(1, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn rejects_low_degree() {
        assert!(c1_squared(1).is_err());
        assert!(c2_squared(0).is_err());
        assert!(mu(1).is_err());
        assert!(reconstruction_constants(1).is_err());
    }

    #[test]
    fn c1_scales_like_inverse_sqrt() {
        for p in 2..=50 {
            let v = c1_squared(p).unwrap().sqrt() * (p as f64).sqrt();
            assert!((0.4..=0.8).contains(&v), "p={p}: {v}");
        }
    }

    #[test]
    fn mu_decreasing() {
        for p in 2..40 {
            assert!(mu(p + 1).unwrap() < mu(p).unwrap());
        }
    }
}
