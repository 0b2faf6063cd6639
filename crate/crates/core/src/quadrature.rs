//! Midpoint quadrature over the Brillouin zone `[-π, π]^d` with deterministic
//! parallel reduction.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Plain midpoint rule on the half-cell-shifted grid.
    Midpoint,
    /// Midpoint rule followed by Richardson extrapolation `2F(2n) - F(n)`,
    /// which cancels the `O(h)` error coming from a `1/|k|^2` singularity at
    /// the origin in three dimensions.
    RefinedNearOrigin,
}

/// Grid description for Brillouin-zone integrals.
///
/// A ladder starts at `points_per_axis` nodes per axis and doubles
/// `doublings` times. One extra doubling is spent only when the ladder looks
/// divergent, so that three successive ratios are available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub points_per_axis: usize,
    pub scheme: Scheme,
    pub doublings: usize,
    /// Relative tolerance on the estimated quadrature error.
    pub tolerance: f64,
    /// A ladder whose every doubling multiplies the estimate by more than
    /// this factor is declared divergent.
    pub divergence_ratio: f64,
}

impl QuadratureSpec {
    /// Defaults by dimension: 64 -> 256 for d = 2, 3; a much finer 1-D ladder
    /// (1-D integrands are cheap and may carry fractional-power
    /// singularities); coarser grids from d = 4 on.
    pub fn for_dim(d: usize) -> Self {
        let points_per_axis = match d {
            1 => 1 << 14,
            2 | 3 => 64,
            4 => 16,
            _ => 8,
        };
        QuadratureSpec {
            points_per_axis,
            scheme: Scheme::RefinedNearOrigin,
            doublings: 2,
            tolerance: 1e-3,
            divergence_ratio: 1.1,
        }
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.points_per_axis = n;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        ensure!(
            self.points_per_axis >= 2 && self.points_per_axis.is_multiple_of(2),
            "quadrature needs an even number (>= 2) of points per axis, got {}",
            self.points_per_axis
        );
        ensure!(self.doublings >= 1, "quadrature ladder needs at least one doubling");
        ensure!(self.tolerance > 0.0, "quadrature tolerance must be positive");
        ensure!(self.divergence_ratio > 1.0, "divergence ratio must exceed 1");
        let top = (self.points_per_axis << (self.doublings + 1)) as f64;
        ensure!(
            top.powi(d as i32) <= 4.0e9,
            "quadrature ladder up to {top} points per axis in d = {d} is too large"
        );
        Ok(())
    }

    /// Grid sizes of the ladder.
    pub fn ladder(&self) -> Vec<usize> {
        (0..=self.doublings).map(|j| self.points_per_axis << j).collect()
    }
}

/// Nodes `-π + (i + 1/2) 2π/n`. For even `n` neither `0` nor `±π` is a node.
pub fn midpoint_nodes(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| -PI + (i as f64 + 0.5) * h).collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Averages of `m` integrands over the `n^d` midpoint grid, i.e. the
/// normalized integrals `∫ f dk / (2π)^d`.
///
/// The grid is cut into fixed-size chunks that are summed in parallel and
/// folded in chunk order, so the result does not depend on the thread count.
pub fn grid_mean_multi<F>(d: usize, n: usize, m: usize, f: F) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let nodes = midpoint_nodes(n);
    let total = n.pow(d as u32);
    let chunks = total.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut idx = vec![0usize; d];
            let mut rem = start;
            for j in (0..d).rev() {
                idx[j] = rem % n;
                rem /= n;
            }
            let mut k: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
            let mut out = vec![0.0; m];
            let mut sums = vec![CompensatedSum::default(); m];
            for _ in start..end {
                f(&k, &mut out);
                for (s, &v) in sums.iter_mut().zip(&out) {
                    s.add(v);
                }
                for j in (0..d).rev() {
                    idx[j] += 1;
                    if idx[j] < n {
                        k[j] = nodes[idx[j]];
                        break;
                    }
                    idx[j] = 0;
                    k[j] = nodes[0];
                }
            }
            sums.iter().map(CompensatedSum::value).collect()
        })
        .collect();
    let mut totals = vec![CompensatedSum::default(); m];
    for p in &partial {
        for (t, &v) in totals.iter_mut().zip(p) {
            t.add(v);
        }
    }
    totals.iter().map(|t| t.value() / total as f64).collect()
}

/// Single-integrand version of [`grid_mean_multi`].
pub fn grid_mean<F>(d: usize, n: usize, f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid_mean_multi(d, n, 1, |k, out| out[0] = f(k))[0]
}

/// Richardson step cancelling an `O(h)` error term.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    2.0 * fine - coarse
}

/// Ladder estimate with Richardson steps `(4F(2n) - F(n))/3`.
pub(crate) fn h2_ladder(grid: Vec<usize>, values: Vec<f64>) -> LadderEstimate {
    let r: Vec<f64> = values.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    let n = values.len();
    let (estimate, error) = match r.len() {
        0 => (values[0], f64::INFINITY),
        1 => (r[0], (values[n - 1] - values[n - 2]).abs()),
        m => (r[m - 1], (r[m - 1] - r[m - 2]).abs()),
    };
    LadderEstimate {
        grid,
        values,
        estimate,
        error,
    }
}

/// Values of an integral along a refinement ladder, plus the extrapolated
/// estimate and its error indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEstimate {
    pub grid: Vec<usize>,
    pub values: Vec<f64>,
    pub estimate: f64,
    pub error: f64,
}

impl LadderEstimate {
    pub fn new(grid: Vec<usize>, values: Vec<f64>, scheme: Scheme) -> Self {
        let n = values.len();
        let (estimate, error) = match scheme {
            Scheme::Midpoint => {
                let e = if n >= 2 {
                    (values[n - 1] - values[n - 2]).abs()
                } else {
                    f64::INFINITY
                };
                (values[n - 1], e)
            }
            Scheme::RefinedNearOrigin => {
                let r: Vec<f64> = values.windows(2).map(|w| richardson(w[0], w[1])).collect();
                let last = r[r.len() - 1];
                let e = if r.len() >= 2 {
                    (last - r[r.len() - 2]).abs()
                } else {
                    (values[n - 1] - values[n - 2]).abs()
                };
                (last, e)
            }
        };
        LadderEstimate {
            grid,
            values,
            estimate,
            error,
        }
    }

    /// True when every doubling multiplied the value by more than `ratio`.
    pub fn looks_divergent(&self, ratio: f64) -> bool {
        self.values.len() >= 4
            && self
                .values
                .windows(2)
                .rev()
                .take(3)
                .all(|w| w[0] > 0.0 && w[1] > ratio * w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_avoid_origin_and_are_symmetric() {
        for n in [2, 4, 64] {
            let x = midpoint_nodes(n);
            assert!(x.iter().all(|&k| k != 0.0 && k.abs() < PI));
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn trigonometric_polynomials_are_exact() {
        let v = grid_mean(2, 16, |k| 1.0 + k[0].cos() * k[1].cos() + (3.0 * k[1]).cos().powi(2));
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let f = |k: &[f64]| 1.0 / (3.0 - k[0].cos() - k[1].cos() - k[2].cos());
        let a = grid_mean(3, 48, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| grid_mean(3, 48, f));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| grid_mean(3, 48, f));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn richardson_removes_linear_error() {
        let est = LadderEstimate::new(
            vec![8, 16, 32],
            vec![2.0 - 0.8, 2.0 - 0.4, 2.0 - 0.2],
            Scheme::RefinedNearOrigin,
        );
        assert!((est.estimate - 2.0).abs() < 1e-14);
        assert!(est.error < 1e-14);
    }

    #[test]
    fn divergence_needs_three_large_steps() {
        let grow = LadderEstimate::new(vec![1, 2, 4, 8], vec![1.0, 1.2, 1.45, 1.7], Scheme::Midpoint);
        assert!(grow.looks_divergent(1.1));
        let slow = LadderEstimate::new(vec![1, 2, 4, 8], vec![1.0, 1.2, 1.45, 1.5], Scheme::Midpoint);
        assert!(!slow.looks_divergent(1.1));
    }
}
