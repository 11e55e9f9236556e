/// Legendre polynomial `L_degree(x)` by the three-term recurrence.
pub fn legendre_eval(degree: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if degree == 0 {
        return prev;
    }
    for k in 1..degree {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Values, first and second derivatives of `L_0..=L_n` at one point.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Tabulates `L_k`, `L_k'` and `L_k''` for `k = 0..=max_degree` at `x`.
///
/// Derivatives use `L'_{k+1} = L'_{k-1} + (2k+1) L_k`, which stays exact at
/// the endpoints `x = ±1`.
pub fn legendre_table(max_degree: usize, x: f64) -> LegendreTable {
    let n = max_degree + 1;
    let mut values = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    values[0] = 1.0;
    if n > 1 {
        values[1] = x;
        d1[1] = 1.0;
    }
    for k in 1..max_degree {
        let kf = k as f64;
        values[k + 1] = ((2.0 * kf + 1.0) * x * values[k] - kf * values[k - 1]) / (kf + 1.0);
        d1[k + 1] = d1[k - 1] + (2.0 * kf + 1.0) * values[k];
        d2[k + 1] = d2[k - 1] + (2.0 * kf + 1.0) * d1[k];
    }
    LegendreTable { values, d1, d2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `L_n(x) = 2^-n Σ_k (-1)^k C(n,k) C(2n-2k,n) x^(n-2k)`.
    fn explicit_legendre(n: usize, x: f64) -> f64 {
        fn binom(n: usize, k: usize) -> f64 {
            (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        }
        let mut sum = 0.0;
        for k in 0..=n / 2 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom(n, k) * binom(2 * n - 2 * k, n) * x.powi((n - 2 * k) as i32);
        }
        sum / 2f64.powi(n as i32)
    }

    #[test]
    fn low_degrees() {
        assert_eq!(legendre_eval(0, 0.3), 1.0);
        assert_eq!(legendre_eval(1, 0.3), 0.3);
    }

    #[test]
    fn matches_explicit_coefficient_formula() {
        let oracle = explicit_legendre(5, 0.7);
        assert!((legendre_eval(5, 0.7) - oracle).abs() < 1e-15);
        for n in 0..12 {
            for &x in &[-1.0, -0.63, 0.0, 0.2, 0.91, 1.0] {
                assert!((legendre_eval(n, x) - explicit_legendre(n, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn endpoint_values_and_derivatives() {
        for n in 0..10 {
            let t = legendre_table(n, 1.0);
            let nf = n as f64;
            assert!((t.values[n] - 1.0).abs() < 1e-14);
            assert!((t.d1[n] - nf * (nf + 1.0) / 2.0).abs() < 1e-12);
            let d2 = (nf - 1.0) * nf * (nf + 1.0) * (nf + 2.0) / 8.0;
            assert!((t.d2[n] - d2).abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        let x = 0.37;
        let t = legendre_table(8, x);
        for n in 0..=8 {
            let fd = (legendre_eval(n, x + h) - legendre_eval(n, x - h)) / (2.0 * h);
            assert!((t.d1[n] - fd).abs() < 1e-7, "n={n}");
        }
    }
}
