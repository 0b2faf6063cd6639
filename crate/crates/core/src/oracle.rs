//! Closed forms and brute-force values used to cross-check the numerical
//! pipelines. None of these share code with the routines they check.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{ensure, Result};

/// Watson's closed form for `∫ dk/(2π)³ 1/(1 - (cos k₁ + cos k₂ + cos k₃)/3)`.
pub fn watson_integral() -> f64 {
    let g = gamma(1.0 / 24.0) * gamma(5.0 / 24.0) * gamma(7.0 / 24.0) * gamma(11.0 / 24.0);
    6f64.sqrt() / (32.0 * PI.powi(3)) * g
}

/// Plain midpoint sum of `1/(1 - Ĵ)` for the nearest-neighbour kernel on an
/// `n^d` grid shifted off the origin, written as an explicit loop.
pub fn riemann_transience(dim: usize, n: usize) -> Result<f64> {
    ensure!((1..=4).contains(&dim), "riemann oracle supports 1 <= d <= 4");
    ensure!(n >= 2 && n.is_multiple_of(2), "grid size must be even");
    let h = 2.0 * PI / n as f64;
    let cosines: Vec<f64> = (0..n).map(|i| (-PI + (i as f64 + 0.5) * h).cos()).collect();
    let mut idx = vec![0usize; dim];
    let mut total = 0.0;
    loop {
        let s: f64 = idx.iter().map(|&i| cosines[i]).sum();
        total += 1.0 / (1.0 - s / dim as f64);
        let mut p = 0;
        loop {
            if p == dim {
                return Ok(total / (n as f64).powi(dim as i32));
            }
            idx[p] += 1;
            if idx[p] < n {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Exact `E σ_0 σ_r` on the `L`-ring with weight `e^{β Σ_x σ_x σ_{x+1}}`,
/// by enumerating all `2^L` states.
pub fn ising_ring_two_point(beta: f64, side: usize, r: usize) -> Result<f64> {
    ensure!((2..=20).contains(&side), "ring enumeration supports 2 <= L <= 20");
    ensure!(r < side, "distance {r} outside the ring");
    let (mut num, mut den) = (0.0, 0.0);
    for state in 0u32..(1 << side) {
        let s = |x: usize| if state >> (x % side) & 1 == 1 { 1.0 } else { -1.0 };
        let e: f64 = (0..side).map(|x| s(x) * s(x + 1)).sum();
        let w = (beta * e).exp();
        num += w * s(0) * s(r);
        den += w;
    }
    Ok(num / den)
}

/// Closed-form mean-field Potts transition `2(q-1) ln(q-1)/(q-2)` in the
/// δ-normalization.
pub fn potts_transition_closed_form(q: usize) -> Result<f64> {
    ensure!(q >= 3, "closed form needs q >= 3");
    let qf = q as f64;
    Ok(2.0 * (qf - 1.0) * (qf - 1.0).ln() / (qf - 2.0))
}

/// Positive root of `m = tanh(βm)` by bisection, for `β > 1`.
pub fn tanh_fixed_point(beta: f64) -> Result<f64> {
    ensure!(beta > 1.0, "a nonzero root needs beta > 1");
    let f = |m: f64| (beta * m).tanh() - m;
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Compass spin-wave free energy at `θ = π/4`: `½(4G/π - ln 2)`.
pub fn compass_quarter_pi() -> f64 {
    const CATALAN: f64 = 0.915_965_594_177_219;
    0.5 * (4.0 * CATALAN / PI - 2f64.ln())
}

/// Escape-problem Dirichlet form on `Z` for the nearest-neighbour walk:
/// `α²/(R+1)`.
pub fn harmonic_profile_1d(alpha: f64, radius: usize) -> f64 {
    alpha * alpha / (radius as f64 + 1.0)
}
