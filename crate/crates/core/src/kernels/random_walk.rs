//! Random-walk diagnostics of a kernel: transience, the mean-field error
//! integral, torus Green's functions, harmonic escape profiles and a direct
//! simulation of the walk with step law `J`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use super::special::binomial;
use super::{periodize_to_tolerance, CouplingMatrix, KernelKind, KernelSpec, DEFAULT_TAIL_TOLERANCE};
use crate::error::{ensure, Error, Result};
use crate::quadrature::{grid_mean_multi, LadderEstimate, QuadratureSpec};
use crate::torus::{Site, TorusSpec};

/// Outcome of a Brillouin-zone integral that may diverge.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Integral {
    Finite(LadderEstimate),
    Divergent(LadderEstimate),
}

impl Integral {
    pub fn value(&self) -> Option<f64> {
        match self {
            Integral::Finite(e) => Some(e.estimate),
            Integral::Divergent(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Integral::Finite(_))
    }

    pub fn ladder(&self) -> &LadderEstimate {
        match self {
            Integral::Finite(e) | Integral::Divergent(e) => e,
        }
    }
}

/// Runs the ladder for `∫ 1/(1-Ĵ)` and `∫ Ĵ²/(1-Ĵ)` together.
fn transience_ladders(kernel: &KernelSpec, quad: &QuadratureSpec) -> Result<(LadderEstimate, LadderEstimate, bool)> {
    let d = kernel.dim();
    quad.validate(d)?;
    let mut grid = quad.ladder();
    let eval = |n: usize| {
        grid_mean_multi(d, n, 2, |k, out| {
            let g = kernel.one_minus_hat(k);
            out[0] = 1.0 / g;
            out[1] = (1.0 - g) * (1.0 - g) / g;
        })
    };
    let mut t = Vec::new();
    let mut i = Vec::new();
    for &n in &grid {
        let v = eval(n);
        t.push(v[0]);
        i.push(v[1]);
    }
    let growing = |t: &[f64]| t.windows(2).all(|w| w[0] > 0.0 && w[1] > quad.divergence_ratio * w[0]);
    if t.len() < 4 && growing(&t) {
        let n = grid[grid.len() - 1] * 2;
        let v = eval(n);
        grid.push(n);
        t.push(v[0]);
        i.push(v[1]);
    }
    let te = LadderEstimate::new(grid.clone(), t, quad.scheme);
    let divergent = te.looks_divergent(quad.divergence_ratio) || !te.estimate.is_finite();
    let ie = LadderEstimate::new(grid, i, quad.scheme);
    Ok((te, ie, divergent))
}

/// `∫ dk/(2π)^d 1/(1 - Ĵ(k))`, the expected number of visits of the walk to
/// its starting point.
pub fn transience_integral(kernel: &KernelSpec, quad: &QuadratureSpec) -> Result<Integral> {
    let (t, _, divergent) = transience_ladders(kernel, quad)?;
    if divergent {
        return Ok(Integral::Divergent(t));
    }
    check_tolerance(&t, quad)?;
    Ok(Integral::Finite(t))
}

fn check_tolerance(t: &LadderEstimate, quad: &QuadratureSpec) -> Result<()> {
    if t.error > quad.tolerance * t.estimate.abs() {
        return Err(Error::Tolerance(format!(
            "estimate {} with error indicator {:e} on grids {:?}",
            t.estimate, t.error, t.grid
        )));
    }
    Ok(())
}

/// `I_d = ∫ dk/(2π)^d Ĵ(k)²/(1 - Ĵ(k))`, computed from its own integrand.
///
/// The tolerance is checked on the companion transience ladder; both share
/// the grid and differ by `1 + ∫Ĵ`, whose midpoint value is zero up to
/// aliasing.
pub fn mean_field_error_integral(kernel: &KernelSpec, quad: &QuadratureSpec) -> Result<LadderEstimate> {
    let (t, i, divergent) = transience_ladders(kernel, quad)?;
    if divergent {
        return Err(Error::Divergent(format!(
            "the walk of this kernel is recurrent; ladder values {:?}",
            t.values
        )));
    }
    check_tolerance(&t, quad)?;
    Ok(i)
}

/// Torus Green's function `G_L(x,y) = L^{-d} Σ_{k≠0} e^{ik·(x-y)}/(1 - Ĵ^{(L)}(k))`.
#[derive(Debug, Clone)]
pub struct TorusGreens {
    torus: TorusSpec,
    modes: Vec<Vec<usize>>,
    inverse: Vec<f64>,
}

impl TorusGreens {
    pub fn new(couplings: &CouplingMatrix) -> Result<Self> {
        let torus = couplings.torus();
        let mut modes = Vec::with_capacity(torus.volume() - 1);
        let mut inverse = Vec::with_capacity(torus.volume() - 1);
        for k in torus.reciprocal_grid().into_iter().skip(1) {
            let g = couplings.one_minus_hat(&k);
            if g <= 1e-14 {
                return Err(Error::Numerical(format!(
                    "degenerate kernel: 1 - Ĵ(k) = {g:e} at nonzero mode {:?}",
                    k.modes
                )));
            }
            inverse.push(1.0 / g);
            modes.push(k.modes);
        }
        Ok(TorusGreens { torus, modes, inverse })
    }

    pub fn torus(&self) -> TorusSpec {
        self.torus
    }

    /// `G_L` as a function of the displacement `v = x - y`.
    pub fn at_displacement(&self, v: &[usize]) -> f64 {
        let l = self.torus.side();
        let step = 2.0 * std::f64::consts::PI / l as f64;
        let mut acc = 0.0;
        for (m, inv) in self.modes.iter().zip(&self.inverse) {
            let phase = m.iter().zip(v).map(|(a, b)| a * b).sum::<usize>() % l;
            acc += inv * (phase as f64 * step).cos();
        }
        acc / self.torus.volume() as f64
    }

    pub fn value(&self, x: &Site, y: &Site) -> f64 {
        self.at_displacement(&self.torus.displacement(y, x))
    }

    /// `G_L(0,0) = L^{-d} Σ_{k≠0} 1/(1 - Ĵ^{(L)}(k))`.
    pub fn diagonal(&self) -> f64 {
        self.inverse.iter().sum::<f64>() / self.torus.volume() as f64
    }

    /// The eigenvalues `1/(1 - Ĵ^{(L)}(k))`, `k ≠ 0`.
    pub fn spectrum(&self) -> &[f64] {
        &self.inverse
    }
}

pub fn torus_greens(torus: TorusSpec, kernel: &KernelSpec, x: &Site, y: &Site) -> Result<f64> {
    let couplings = periodize_to_tolerance(kernel, torus, DEFAULT_TAIL_TOLERANCE)?;
    Ok(TorusGreens::new(&couplings)?.value(x, y))
}

/// Solution of the escape problem on the box `[-R, R]^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicProfile {
    pub dim: usize,
    pub radius: usize,
    pub alpha: f64,
    /// `φ` on the box, row-major with coordinates shifted by `R`.
    pub profile: Vec<f64>,
    /// `α Σ_y J_{0,y}(α - φ_y)`.
    pub dirichlet_form: f64,
    /// `½ Σ_{x,y} J_{x,y}(φ_x - φ_y)²`, evaluated over all of `Z^d`.
    pub quadratic_form: f64,
    pub iterations: usize,
}

impl HarmonicProfile {
    pub fn at(&self, x: &[i64]) -> f64 {
        let side = 2 * self.radius as i64 + 1;
        let r = self.radius as i64;
        if x.iter().any(|c| c.abs() > r) {
            return 0.0;
        }
        let idx = x.iter().fold(0i64, |acc, c| acc * side + c + r);
        self.profile[idx as usize]
    }
}

struct BoxOperator {
    dim: usize,
    side: i64,
    offsets: Vec<(Vec<i64>, f64)>,
    /// `1 - Σ_{y in box} J_{x,y}` per site.
    leak: Vec<f64>,
}

impl BoxOperator {
    fn new(kernel: &KernelSpec, radius: usize) -> Result<Self> {
        let d = kernel.dim();
        let side = 2 * radius as i64 + 1;
        let reach = match kernel.range() {
            Some(r) => r.min(2 * radius as u64) as i64,
            None => 2 * radius as i64,
        };
        let span = 2 * reach + 1;
        let mut offsets = Vec::new();
        for idx in 0..span.pow(d as u32) {
            let mut rem = idx;
            let mut x = vec![0i64; d];
            for c in x.iter_mut().rev() {
                *c = rem % span - reach;
                rem /= span;
            }
            let j = kernel.coupling(&x);
            if j != 0.0 {
                offsets.push((x, j));
            }
        }
        let m = side.pow(d as u32) as usize;
        ensure!(
            (m as f64) * (offsets.len() as f64) <= 5e8,
            "box of radius {radius} is too large for a kernel with {} couplings in reach",
            offsets.len()
        );
        let mut op = BoxOperator {
            dim: d,
            side,
            offsets,
            leak: Vec::new(),
        };
        let ones = vec![1.0; m];
        let inside = op.apply_j(&ones);
        op.leak = inside.iter().map(|s| (1.0 - s).max(0.0)).collect();
        Ok(op)
    }

    fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut x = vec![0i64; self.dim];
        for c in x.iter_mut().rev() {
            *c = (idx as i64) % self.side;
            idx /= self.side as usize;
        }
        x
    }

    /// `½ Σ_{x,y} J_{x,y}(φ_x - φ_y)²` over `Z^d` for `φ` supported on the box:
    /// the pair sum inside the box plus `φ_x²` times the mass leaving it.
    fn gradient_energy(&self, phi: &[f64]) -> f64 {
        let pairs: Vec<f64> = (0..phi.len())
            .into_par_iter()
            .map(|i| {
                let x = self.coords(i);
                let mut acc = phi[i] * phi[i] * self.leak[i];
                'off: for (off, j) in &self.offsets {
                    let mut idx = 0i64;
                    for (c, o) in x.iter().zip(off) {
                        let y = c + o;
                        if y < 0 || y >= self.side {
                            continue 'off;
                        }
                        idx = idx * self.side + y;
                    }
                    let diff = phi[i] - phi[idx as usize];
                    acc += 0.5 * j * diff * diff;
                }
                acc
            })
            .collect();
        pairs.iter().sum()
    }

    /// `(J φ)_x = Σ_{y in box} J_{x,y} φ_y`.
    fn apply_j(&self, phi: &[f64]) -> Vec<f64> {
        (0..phi.len())
            .into_par_iter()
            .map(|i| {
                let x = self.coords(i);
                let mut acc = 0.0;
                'off: for (off, j) in &self.offsets {
                    let mut idx = 0i64;
                    for (c, o) in x.iter().zip(off) {
                        let y = c + o;
                        if y < 0 || y >= self.side {
                            continue 'off;
                        }
                        idx = idx * self.side + y;
                    }
                    acc += j * phi[idx as usize];
                }
                acc
            })
            .collect()
    }
}

/// Solves `(1 - J) φ = 0` on `[-R,R]^d \ {0}` with `φ(0) = α` and `φ = 0`
/// outside the box, by conjugate gradients (the restricted operator is
/// symmetric positive definite).
pub fn harmonic_escape_profile(kernel: &KernelSpec, radius: usize, alpha: f64) -> Result<HarmonicProfile> {
    ensure!(radius >= 1, "box radius must be at least 1");
    ensure!(alpha.is_finite(), "alpha must be finite");
    let op = BoxOperator::new(kernel, radius)?;
    let m = op.side.pow(op.dim as u32) as usize;
    let center = (m - 1) / 2;

    let mut pinned = vec![0.0; m];
    pinned[center] = alpha;
    let mut b = op.apply_j(&pinned);
    b[center] = 0.0;

    let apply_a = |u: &[f64]| -> Vec<f64> {
        let ju = op.apply_j(u);
        let mut out: Vec<f64> = u.iter().zip(&ju).map(|(a, b)| a - b).collect();
        out[center] = 0.0;
        out
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut u = vec![0.0; m];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = 1e-30 * dot(&b, &b).max(1e-300);
    let mut iterations = 0;
    while rr > target {
        if iterations > 20 * m + 100 {
            return Err(Error::Numerical(format!(
                "conjugate gradients stalled at residual {:e}",
                rr.sqrt()
            )));
        }
        let ap = apply_a(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical("restricted operator is not positive definite".into()));
        }
        let a = rr / pap;
        for i in 0..m {
            u[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    u[center] = alpha;
    let phi = u;

    let jphi = op.apply_j(&phi);
    let dirichlet_form = alpha * (alpha - jphi[center]);
    let quadratic_form = op.gradient_energy(&phi);

    Ok(HarmonicProfile {
        dim: op.dim,
        radius,
        alpha,
        profile: phi,
        dirichlet_form,
        quadratic_form,
        iterations,
    })
}

/// Monte Carlo estimate of the expected number of visits to the origin,
/// counting time zero, within the first `steps` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub walks: usize,
    pub steps: usize,
    /// Coupling mass beyond the largest sampled jump; zero for kernels whose
    /// step law is represented exactly.
    pub truncated_mass: f64,
}

enum StepSampler {
    NearestNeighbor {
        d: usize,
    },
    Radial {
        d: usize,
        radius: WeightedAliasIndex<f64>,
    },
    Mixture {
        choose: WeightedAliasIndex<f64>,
        parts: Vec<StepSampler>,
    },
}

impl StepSampler {
    fn new(kernel: &KernelSpec) -> Result<(Self, f64)> {
        const MAX_RADIUS: u64 = 1 << 20;
        Ok(match kernel.kind() {
            KernelKind::NearestNeighbor => (StepSampler::NearestNeighbor { d: kernel.dim() }, 0.0),
            KernelKind::Mixture { parts } => {
                let mut samplers = Vec::new();
                let mut lost = 0.0;
                for (w, k) in parts {
                    let (s, t) = StepSampler::new(k)?;
                    samplers.push(s);
                    lost += w * t;
                }
                let choose = WeightedAliasIndex::new(parts.iter().map(|(w, _)| *w).collect())
                    .map_err(|e| Error::Numerical(e.to_string()))?;
                (
                    StepSampler::Mixture {
                        choose,
                        parts: samplers,
                    },
                    lost,
                )
            }
            _ => {
                let mut weights = Vec::new();
                let mut inside = 0.0;
                let mut r = 1;
                while r <= MAX_RADIUS {
                    let w = kernel.shell_mass(r);
                    weights.push(w);
                    inside += w;
                    if 1.0 - inside < 1e-15 {
                        break;
                    }
                    r += 1;
                }
                let radius = WeightedAliasIndex::new(weights).map_err(|e| Error::Numerical(e.to_string()))?;
                (
                    StepSampler::Radial {
                        d: kernel.dim(),
                        radius,
                    },
                    (1.0 - inside).max(0.0),
                )
            }
        })
    }

    fn step<R: Rng>(&self, rng: &mut R, pos: &mut [i64]) {
        match self {
            StepSampler::NearestNeighbor { d } => {
                let c = rng.random_range(0..2 * d);
                pos[c / 2] += if c % 2 == 0 { 1 } else { -1 };
            }
            StepSampler::Radial { d, radius } => {
                let r = radius.sample(rng) as u64 + 1;
                uniform_l1_sphere(rng, *d, r, pos);
            }
            StepSampler::Mixture { choose, parts } => parts[choose.sample(rng)].step(rng, pos),
        }
    }
}

/// Adds a uniformly chosen point of `{x : |x|_1 = r}` to `pos`.
fn uniform_l1_sphere<R: Rng>(rng: &mut R, d: usize, r: u64, pos: &mut [i64]) {
    let max_i = d.min(r as usize);
    let weights: Vec<f64> = (1..=max_i)
        .map(|i| 2f64.powi(i as i32) * binomial(d as u64, i as u64) * binomial(r - 1, i as u64 - 1))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut nonzero = max_i;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            nonzero = i + 1;
            break;
        }
        u -= w;
    }
    let axes = sample(rng, d, nonzero);
    let mut cuts: Vec<u64> = if nonzero > 1 {
        sample(rng, r as usize - 1, nonzero - 1)
            .iter()
            .map(|c| c as u64 + 1)
            .collect()
    } else {
        Vec::new()
    };
    cuts.sort_unstable();
    let mut prev = 0;
    for (n, axis) in axes.iter().enumerate() {
        let end = if n + 1 < nonzero { cuts[n] } else { r };
        let part = (end - prev) as i64;
        prev = end;
        pos[axis] += if rng.random::<bool>() { part } else { -part };
    }
}

pub fn simulate_walk_returns(kernel: &KernelSpec, steps: usize, walks: usize, seed: u64) -> Result<WalkEstimate> {
    const BLOCK: usize = 512;
    ensure!(steps >= 1 && walks >= 1, "steps and walks must be at least 1");
    let (sampler, truncated_mass) = StepSampler::new(kernel)?;
    let d = kernel.dim();
    let blocks = walks.div_ceil(BLOCK);
    let partial: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BLOCK.min(walks - b * BLOCK);
            let mut pos = vec![0i64; d];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                pos.iter_mut().for_each(|c| *c = 0);
                let mut visits = 1u64;
                for _ in 0..steps {
                    sampler.step(&mut rng, &mut pos);
                    if pos.iter().all(|&c| c == 0) {
                        visits += 1;
                    }
                }
                let v = visits as f64;
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = walks as f64;
    let mean = s / n;
    let var = if walks > 1 {
        (s2 - n * mean * mean) / (n - 1.0)
    } else {
        0.0
    };
    Ok(WalkEstimate {
        mean,
        standard_error: (var.max(0.0) / n).sqrt(),
        walks,
        steps,
        truncated_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::periodize;

    #[test]
    fn greens_is_symmetric_with_zero_row_sums() {
        let torus = TorusSpec::new(2, 6).unwrap();
        let kern = KernelSpec::yukawa(2, 1.0).unwrap();
        let g = TorusGreens::new(&periodize_to_tolerance(&kern, torus, 1e-13).unwrap()).unwrap();
        let x = torus.site(7);
        let mut row = 0.0;
        for y in torus.sites() {
            assert!((g.value(&x, &y) - g.value(&y, &x)).abs() < 1e-13);
            row += g.value(&x, &y);
        }
        assert!(row.abs() < 1e-12);
    }

    #[test]
    fn greens_inverts_the_generator_on_mean_zero_fields() {
        // (1 - J) G = I - 1/N
        let torus = TorusSpec::new(2, 4).unwrap();
        let nn = KernelSpec::nearest_neighbor(2).unwrap();
        let j = periodize(&nn, torus, 1).unwrap();
        let g = TorusGreens::new(&j).unwrap();
        let n = torus.volume();
        for x in 0..n {
            let col: Vec<f64> = (0..n).map(|y| g.value(&torus.site(y), &torus.site(x))).collect();
            let jcol = j.apply(&col);
            for y in 0..n {
                let expect = if x == y { 1.0 } else { 0.0 } - 1.0 / n as f64;
                assert!((col[y] - jcol[y] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_gamblers_ruin() {
        let nn = KernelSpec::nearest_neighbor(1).unwrap();
        for radius in [1usize, 3, 10] {
            let alpha = 1.7;
            let h = harmonic_escape_profile(&nn, radius, alpha).unwrap();
            let r1 = radius as f64 + 1.0;
            for x in -(radius as i64)..=radius as i64 {
                let expect = alpha * (r1 - x.abs() as f64) / r1;
                assert!((h.at(&[x]) - expect).abs() < 1e-12);
            }
            assert!((h.dirichlet_form - alpha * alpha / r1).abs() < 1e-12);
            assert!((h.dirichlet_form - h.quadratic_form).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_form_two_ways_for_long_range_kernel() {
        let kern = KernelSpec::yukawa(2, 1.2).unwrap();
        let h = harmonic_escape_profile(&kern, 4, 1.0).unwrap();
        assert!((h.dirichlet_form - h.quadratic_form).abs() < 1e-10);
        assert!(h.dirichlet_form > 0.0 && h.dirichlet_form < 1.0);
    }

    #[test]
    fn l1_sphere_sampling_hits_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = rng.random_range(1..7u64);
            let mut pos = vec![0i64; 3];
            uniform_l1_sphere(&mut rng, 3, r, &mut pos);
            assert_eq!(pos.iter().map(|c| c.unsigned_abs()).sum::<u64>(), r);
        }
    }

    #[test]
    fn l1_sphere_sampling_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = std::collections::HashMap::new();
        let trials = 60_000;
        for _ in 0..trials {
            let mut pos = vec![0i64; 2];
            uniform_l1_sphere(&mut rng, 2, 3, &mut pos);
            *counts.entry(pos).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 12);
        let expect = trials as f64 / 12.0;
        for c in counts.values() {
            assert!((*c as f64 - expect).abs() < 5.0 * expect.sqrt());
        }
    }

    #[test]
    fn walks_are_reproducible() {
        let nn = KernelSpec::nearest_neighbor(3).unwrap();
        let a = simulate_walk_returns(&nn, 200, 700, 5).unwrap();
        let b = simulate_walk_returns(&nn, 200, 700, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recurrent_walk_keeps_returning() {
        let nn = KernelSpec::nearest_neighbor(1).unwrap();
        let short = simulate_walk_returns(&nn, 100, 2000, 1).unwrap();
        let long = simulate_walk_returns(&nn, 10_000, 2000, 1).unwrap();
        assert!(long.mean > 5.0 * short.mean);
    }
}
