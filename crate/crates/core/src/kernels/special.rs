//! Zeta-function helpers for power-law kernels.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// Riemann zeta on the real line, `x != 1`.
pub fn zeta(x: f64) -> f64 {
    if x == 0.0 {
        -0.5
    } else if x >= 0.5 {
        spfunc::zeta::zeta(x)
    } else {
        // functional equation
        2f64.powf(x) * PI.powf(x - 1.0) * (0.5 * PI * x).sin() * gamma(1.0 - x) * zeta(1.0 - x)
    }
}

/// Binomial coefficient as a float; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of points of `Z^d` at ℓ1 distance exactly `r >= 1` from the origin.
pub fn l1_sphere_count(d: usize, r: u64) -> f64 {
    (1..=d as u64)
        .map(|i| 2f64.powi(i as i32) * binomial(d as u64, i) * binomial(r - 1, i - 1))
        .sum()
}

/// Coefficients `a_m` with `#{x : |x|_1 = r} = Σ_m a_m r^m` for all `r >= 1`.
pub fn l1_sphere_polynomial(d: usize) -> Vec<f64> {
    let mut total = vec![0.0; d];
    for i in 1..=d {
        // C(r-1, i-1) = Π_{j=1}^{i-1} (r - j) / (i-1)!
        let mut poly = vec![1.0];
        for j in 1..i {
            let mut next = vec![0.0; poly.len() + 1];
            for (m, &c) in poly.iter().enumerate() {
                next[m + 1] += c;
                next[m] -= c * j as f64;
            }
            poly = next;
        }
        let fact: f64 = (1..i).map(|j| j as f64).product();
        let w = 2f64.powi(i as i32) * binomial(d as u64, i as u64) / fact;
        for (m, &c) in poly.iter().enumerate() {
            total[m] += w * c;
        }
    }
    total
}

/// `Σ_{x != 0} |x|_1^{-s}` over `Z^d`, finite for `s > d`.
pub fn l1_power_sum(d: usize, s: f64) -> f64 {
    l1_sphere_polynomial(d)
        .iter()
        .enumerate()
        .map(|(m, &a)| if a == 0.0 { 0.0 } else { a * zeta(s - m as f64) })
        .sum()
}

/// `Σ_{n>=1} (1 - cos(n k)) n^{-s}` for non-integer `s > 1` and `|k| <= π`,
/// from the expansion of the polylogarithm `Li_s(e^{ik})` around `k = 0`:
/// a singular term `∝ |k|^{s-1}` plus an even power series whose
/// coefficients are zeta values at `s - 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosinePowerSeries {
    s: f64,
    singular: f64,
    coeffs: Vec<f64>,
}

impl CosinePowerSeries {
    pub fn new(s: f64) -> Self {
        let singular = -gamma(1.0 - s) * (0.5 * PI * (s - 1.0)).cos();
        let mut coeffs = Vec::new();
        let mut fact = 1.0;
        for m in 1..=40 {
            let j = 2 * m;
            fact *= -1.0 / ((j - 1) as f64 * j as f64);
            coeffs.push(zeta(s - j as f64) * fact);
        }
        CosinePowerSeries { s, singular, coeffs }
    }

    pub fn eval(&self, k: f64) -> f64 {
        let k = k.abs();
        if k == 0.0 {
            return 0.0;
        }
        let k2 = k * k;
        // Horner in k^2
        let series = self.coeffs.iter().rev().fold(0.0, |acc, &c| (acc + c) * k2);
        self.singular * k.powf(self.s - 1.0) - series
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((zeta(4.0) - PI.powi(4) / 90.0).abs() < 1e-13);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
        assert!((zeta(-1.0) + 1.0 / 12.0).abs() < 1e-13);
        assert!(zeta(-2.0).abs() < 1e-13);
        assert!((zeta(0.0) + 0.5).abs() < 1e-13);
        assert!((zeta(-0.5) + 0.207_886_224_977_354_57).abs() < 1e-12);
    }

    #[test]
    fn sphere_counts_match_enumeration() {
        for d in 1..=4usize {
            let poly = l1_sphere_polynomial(d);
            for r in 1..6u64 {
                let mut brute = 0usize;
                let side = 2 * r as i64 + 1;
                let total = side.pow(d as u32);
                for idx in 0..total {
                    let mut rem = idx;
                    let mut norm = 0;
                    for _ in 0..d {
                        norm += (rem % side - r as i64).abs();
                        rem /= side;
                    }
                    if norm == r as i64 {
                        brute += 1;
                    }
                }
                assert_eq!(l1_sphere_count(d, r), brute as f64);
                let p: f64 = poly
                    .iter()
                    .enumerate()
                    .map(|(m, a)| a * (r as f64).powi(m as i32))
                    .sum();
                assert!((p - brute as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn power_sum_matches_direct_summation() {
        let s = 5.0;
        let direct: f64 = (1..200_000u64).map(|r| 4.0 * r as f64 * (r as f64).powf(-s)).sum();
        assert!((l1_power_sum(2, s) - direct).abs() < 1e-9);
    }

    #[test]
    fn deficit_matches_direct_series() {
        let s = 3.5;
        let series = CosinePowerSeries::new(s);
        for &k in &[0.1, 1.0, 2.5, PI] {
            let mut direct = crate::quadrature::CompensatedSum::default();
            for n in 1..2_000_000u64 {
                direct.add((1.0 - (n as f64 * k).cos()) * (n as f64).powf(-s));
            }
            let direct = direct.value();
            assert!(
                (series.eval(k) - direct).abs() < 1e-12,
                "k={k}: {} vs {direct}",
                series.eval(k)
            );
        }
    }
}
