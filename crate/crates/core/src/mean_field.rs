//! Mean-field free energies `Φ_β(m) = -(β/2)|m|² - 𝒮(m)`, their stationary
//! points, the Potts transition, and the admissibility band of width
//! `νβ I_d / 2` around the global minimum.
//!
//! Two coupling normalizations appear. General measures use the dot-product
//! one (`β` multiplies `S_x·S_y`); the Potts on-axis profile uses the
//! δ-normalization, related by `β_dot = β_δ (q-1)/q`.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certificate::Certificate;
use crate::error::{ensure, Error, Result};
use crate::models::{dot, tetrahedral_vectors, ModelFamily, ModelSpec};

const SPHERE_DEGREE: usize = 64;
const SPHERE_CHECK_DEGREE: usize = 44;
const SPHERE_TOL: f64 = 1e-10;

/// Single-spin a priori measure.
#[derive(Debug, Clone)]
pub enum SingleSpinMeasure {
    /// Weighted atoms whose points are affinely independent (Ising, Potts).
    Atoms { points: Vec<Vec<f64>>, weights: Vec<f64> },
    /// Uniform measure on the unit sphere of `R^n`, integrated over the cosine
    /// `t` of the polar angle with Gauss–Jacobi rules for `(1-t²)^{(n-3)/2}`.
    Sphere {
        n: usize,
        rule: Vec<(f64, f64)>,
        check: Vec<(f64, f64)>,
    },
}

fn jacobi_rule(n: usize, degree: usize) -> Vec<(f64, f64)> {
    let a = FiniteAboveNegOneF64::new((n as f64 - 3.0) / 2.0).expect("n >= 2");
    let rule = GaussJacobi::new(NonZeroUsize::new(degree).expect("degree > 0"), a, a);
    let total: f64 = rule.weights().sum();
    rule.iter().map(|(t, w)| (*t, *w / total)).collect()
}

impl SingleSpinMeasure {
    pub fn ising() -> Self {
        SingleSpinMeasure::Atoms {
            points: vec![vec![1.0], vec![-1.0]],
            weights: vec![0.5, 0.5],
        }
    }

    /// Uniform measure on the tetrahedral vectors of `R^{q-1}`.
    pub fn potts(q: usize) -> Result<Self> {
        let points = tetrahedral_vectors(q)?;
        Ok(SingleSpinMeasure::Atoms {
            points,
            weights: vec![1.0 / q as f64; q],
        })
    }

    pub fn sphere(n: usize) -> Result<Self> {
        ensure!(n >= 2, "sphere measures need n >= 2, got {n}");
        Ok(SingleSpinMeasure::Sphere {
            n,
            rule: jacobi_rule(n, SPHERE_DEGREE),
            check: jacobi_rule(n, SPHERE_CHECK_DEGREE),
        })
    }

    pub fn for_model(model: &ModelSpec) -> Result<Self> {
        match model.family() {
            ModelFamily::Ising => Ok(Self::ising()),
            ModelFamily::Potts { q } => Self::potts(*q),
            ModelFamily::On { n: 1 } => Ok(Self::ising()),
            ModelFamily::On { n } => Self::sphere(*n),
            other => Err(Error::NotApplicable(format!(
                "no single-spin mean-field measure for {other:?}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SingleSpinMeasure::Atoms { points, .. } => points[0].len(),
            SingleSpinMeasure::Sphere { n, .. } => *n,
        }
    }

    /// A unit vector along which the interesting behaviour happens: the first
    /// atom for atomic measures, `e_1` for spheres.
    pub fn axis(&self) -> Vec<f64> {
        match self {
            SingleSpinMeasure::Atoms { points, .. } => points[0].clone(),
            SingleSpinMeasure::Sphere { n, .. } => {
                let mut e = vec![0.0; *n];
                e[0] = 1.0;
                e
            }
        }
    }

    /// Range of `t` for which `t·axis` lies in the closed convex hull.
    pub fn axis_range(&self) -> (f64, f64) {
        match self {
            SingleSpinMeasure::Atoms { points, .. } if points.len() > 2 => (-1.0 / (points.len() - 1) as f64, 1.0),
            _ => (-1.0, 1.0),
        }
    }
}

/// Value, gradient and Hessian of `G(h) = log E e^{h·S}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cumulant {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

/// `(log E e^{rt}, E_r t, E_r t²)` for the polar-cosine rule.
fn sphere_moments(rule: &[(f64, f64)], r: f64) -> (f64, f64, f64) {
    // shift by r so the exponentials stay bounded
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for &(t, w) in rule {
        let e = w * (r * (t - 1.0)).exp();
        z += e;
        m1 += e * t;
        m2 += e * t * t;
    }
    (r + z.ln(), m1 / z, m2 / z)
}

pub fn cumulant_generating(measure: &SingleSpinMeasure, h: &[f64]) -> Result<Cumulant> {
    ensure!(
        h.len() == measure.dim(),
        "field has {} components, expected {}",
        h.len(),
        measure.dim()
    );
    ensure!(h.iter().all(|v| v.is_finite()), "field must be finite");
    let nu = h.len();
    match measure {
        SingleSpinMeasure::Atoms { points, weights } => {
            let logs: Vec<f64> = points.iter().zip(weights).map(|(p, w)| dot(p, h) + w.ln()).collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let p: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
            let z: f64 = p.iter().sum();
            let mut grad = vec![0.0; nu];
            let mut second = DMatrix::zeros(nu, nu);
            for (pt, pi) in points.iter().zip(&p) {
                let w = pi / z;
                for a in 0..nu {
                    grad[a] += w * pt[a];
                    for b in 0..nu {
                        second[(a, b)] += w * pt[a] * pt[b];
                    }
                }
            }
            let g = DVector::from_column_slice(&grad);
            Ok(Cumulant {
                value: top + z.ln(),
                hessian: second - &g * g.transpose(),
                gradient: grad,
            })
        }
        SingleSpinMeasure::Sphere { n, rule, check } => {
            let r = dot(h, h).sqrt();
            let (value, m1, m2) = sphere_moments(rule, r);
            let (coarse, ..) = sphere_moments(check, r);
            if (value - coarse).abs() > SPHERE_TOL * value.abs().max(1.0) {
                return Err(Error::Tolerance(format!(
                    "polar quadrature not converged at |h| = {r}: {value} vs {coarse}"
                )));
            }
            let n = *n;
            let transverse = (1.0 - m2) / (n - 1) as f64;
            if r == 0.0 {
                return Ok(Cumulant {
                    value: 0.0,
                    gradient: vec![0.0; n],
                    hessian: DMatrix::identity(n, n) * (1.0 / n as f64),
                });
            }
            let e = DVector::from_iterator(n, h.iter().map(|v| v / r));
            let proj = &e * e.transpose();
            let hessian = &proj * (m2 - m1 * m1) + (DMatrix::identity(n, n) - &proj) * transverse;
            Ok(Cumulant {
                value,
                gradient: e.iter().map(|v| v * m1).collect(),
                hessian,
            })
        }
    }
}

/// Barycentric coordinates of `m` with respect to affinely independent atoms.
fn barycentric(points: &[Vec<f64>], m: &[f64]) -> Option<Vec<f64>> {
    let k = points.len();
    let nu = m.len();
    let mut a = DMatrix::<f64>::zeros(nu + 1, k);
    let mut b = DVector::zeros(nu + 1);
    for (j, p) in points.iter().enumerate() {
        for i in 0..nu {
            a[(i, j)] = p[i];
        }
        a[(nu, j)] = 1.0;
    }
    b.as_mut_slice()[..nu].copy_from_slice(m);
    b[nu] = 1.0;
    let x = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let residual = (&a * &x - &b).norm();
    (residual < 1e-10).then(|| x.iter().cloned().collect())
}

const HULL_EPS: f64 = 1e-13;

/// `𝒮(m) = inf_h [G(h) - h·m]`. Returns `-∞` outside the closed convex hull
/// of the spin space.
pub fn entropy(measure: &SingleSpinMeasure, m: &[f64]) -> Result<f64> {
    ensure!(
        m.len() == measure.dim(),
        "m has {} components, expected {}",
        m.len(),
        measure.dim()
    );
    match measure {
        SingleSpinMeasure::Atoms { points, weights } => {
            let Some(x) = barycentric(points, m) else {
                return Ok(f64::NEG_INFINITY);
            };
            if x.iter().any(|&v| v < -HULL_EPS) {
                return Ok(f64::NEG_INFINITY);
            }
            if x.iter().any(|&v| v <= HULL_EPS) {
                // on a face: the infimum runs off to infinity along the outward
                // normal and leaves the face's own entropy plus its log-mass
                let keep: Vec<usize> = (0..x.len()).filter(|&i| x[i] > HULL_EPS).collect();
                let mass: f64 = keep.iter().map(|&i| weights[i]).sum();
                let face: f64 = keep.iter().map(|&i| x[i] * (x[i] / (weights[i] / mass)).ln()).sum();
                return Ok(mass.ln() - face);
            }
            legendre_newton(measure, m)
        }
        SingleSpinMeasure::Sphere { n, .. } => {
            let r = dot(m, m).sqrt();
            if r >= 1.0 {
                // the sphere measure has no atoms, so even the boundary costs -∞
                return Ok(f64::NEG_INFINITY);
            }
            if r == 0.0 {
                return Ok(0.0);
            }
            // radial problem: find s with E_s t = r, then 𝒮 = G(s) - s r
            let mean = |s: f64| {
                let mut h = vec![0.0; *n];
                h[0] = s;
                cumulant_generating(measure, &h).map(|c| (c.value, c.gradient[0]))
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            while mean(hi)?.1 < r {
                hi *= 2.0;
                if hi > 1e4 {
                    return Err(Error::Tolerance(format!("|m| = {r} is too close to the sphere")));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mean(mid)?.1 < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 * hi {
                    break;
                }
            }
            let s = 0.5 * (lo + hi);
            Ok(mean(s)?.0 - s * r)
        }
    }
}

/// Damped Newton minimization of `G(h) - h·m` for interior points.
fn legendre_newton(measure: &SingleSpinMeasure, m: &[f64]) -> Result<f64> {
    let nu = m.len();
    let mut h = vec![0.0; nu];
    let objective = |h: &[f64]| cumulant_generating(measure, h).map(|c| c.value - dot(h, m));
    let mut f = objective(&h)?;
    for _ in 0..500 {
        let c = cumulant_generating(measure, &h)?;
        let grad = DVector::from_iterator(nu, c.gradient.iter().zip(m).map(|(g, mm)| g - mm));
        if grad.norm() < 1e-14 {
            break;
        }
        let hess = &c.hessian + DMatrix::identity(nu, nu) * 1e-300;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => grad.clone(),
        };
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = h.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let ft = objective(&trial)?;
            if ft <= f - 1e-4 * t * grad.dot(&step) || t < 1e-12 {
                if ft <= f {
                    h = trial;
                    f = ft;
                }
                break;
            }
            t *= 0.5;
        }
        if t < 1e-12 {
            break;
        }
    }
    Ok(f)
}

/// `Φ_β(m) = -(β/2)|m|² - 𝒮(m)`; `+∞` outside the convex hull.
pub fn free_energy(measure: &SingleSpinMeasure, beta: f64, m: &[f64]) -> Result<f64> {
    ensure!(beta >= 0.0 && beta.is_finite(), "beta must be finite and >= 0");
    let s = entropy(measure, m)?;
    if s == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(-0.5 * beta * dot(m, m) - s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// Local minimum of `Φ_β`.
    Stable,
    /// Saddle or maximum.
    Unstable,
    /// Hessian singular within tolerance.
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub m: Vec<f64>,
    pub phi: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub start: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolutions {
    pub beta: f64,
    pub solutions: Vec<MeanFieldSolution>,
    pub starts: Vec<StartOutcome>,
}

const DAMPING: f64 = 0.5;
const MAX_ITER: usize = 200_000;
const DEDUP_TOL: f64 = 1e-9;

/// Ten starts spread along [`SingleSpinMeasure::axis`] inside the admissible
/// range.
pub fn default_starts(measure: &SingleSpinMeasure) -> Vec<Vec<f64>> {
    let axis = measure.axis();
    let (lo, hi) = measure.axis_range();
    (0..10)
        .map(|i| {
            let t = lo + (hi - lo) * (i as f64 + 0.5) / 10.0;
            axis.iter().map(|a| a * t).collect()
        })
        .collect()
}

fn classify(measure: &SingleSpinMeasure, beta: f64, m: &[f64]) -> Result<Stability> {
    // Hess Φ = -β + Cov_{βm}^{-1}, so stability means β λ_max(Cov) < 1
    let h: Vec<f64> = m.iter().map(|v| beta * v).collect();
    let c = cumulant_generating(measure, &h)?;
    let top = c.hessian.symmetric_eigen().eigenvalues.max();
    let x = beta * top;
    Ok(if (x - 1.0).abs() < 1e-9 {
        Stability::Marginal
    } else if x < 1.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

fn add_solution(measure: &SingleSpinMeasure, beta: f64, m: Vec<f64>, out: &mut Vec<MeanFieldSolution>) -> Result<()> {
    if out
        .iter()
        .any(|s| s.m.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < DEDUP_TOL)
    {
        return Ok(());
    }
    let phi = free_energy(measure, beta, &m)?;
    let stability = classify(measure, beta, &m)?;
    out.push(MeanFieldSolution { m, phi, stability });
    Ok(())
}

fn residual(measure: &SingleSpinMeasure, beta: f64, m: &[f64]) -> Result<Vec<f64>> {
    let h: Vec<f64> = m.iter().map(|v| beta * v).collect();
    let g = cumulant_generating(measure, &h)?.gradient;
    Ok(g.iter().zip(m).map(|(a, b)| a - b).collect())
}

/// Solutions of `m = ∇G(βm)`: damped iteration from each start, plus
/// bisection along each start's ray for the unstable roots the iteration
/// cannot reach. Solutions are sorted by `Φ`.
pub fn solve_mean_field(measure: &SingleSpinMeasure, beta: f64, starts: &[Vec<f64>]) -> Result<MeanFieldSolutions> {
    ensure!(beta >= 0.0 && beta.is_finite(), "beta must be finite and >= 0");
    let nu = measure.dim();
    ensure!(
        starts.iter().all(|s| s.len() == nu),
        "every start needs {nu} components"
    );
    let mut solutions = Vec::new();
    let mut outcomes = Vec::new();
    for start in starts {
        let mut m = start.clone();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_ITER {
            iterations += 1;
            let h: Vec<f64> = m.iter().map(|v| beta * v).collect();
            let g = cumulant_generating(measure, &h)?.gradient;
            let next: Vec<f64> = m
                .iter()
                .zip(&g)
                .map(|(a, b)| (1.0 - DAMPING) * a + DAMPING * b)
                .collect();
            let step = next.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            m = next;
            if step < 1e-15 {
                converged = true;
                break;
            }
        }
        if converged {
            add_solution(measure, beta, m, &mut solutions)?;
        }
        outcomes.push(StartOutcome {
            start: start.clone(),
            converged,
            iterations,
        });
    }
    let zero = vec![0.0; nu];
    if dot(&residual(measure, beta, &zero)?, &residual(measure, beta, &zero)?).sqrt() < 1e-12 {
        add_solution(measure, beta, zero, &mut solutions)?;
    }
    for start in starts {
        let norm = dot(start, start).sqrt();
        if norm == 0.0 {
            continue;
        }
        let e: Vec<f64> = start.iter().map(|v| v / norm).collect();
        for t in ray_roots(measure, beta, &e)? {
            let m: Vec<f64> = e.iter().map(|v| v * t).collect();
            let r = residual(measure, beta, &m)?;
            if dot(&r, &r).sqrt() < 1e-9 {
                add_solution(measure, beta, m, &mut solutions)?;
            }
        }
    }
    solutions.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    Ok(MeanFieldSolutions {
        beta,
        solutions,
        starts: outcomes,
    })
}

/// Roots `t > 0` of `e·∇G(βte) - t` by sign-change bisection.
fn ray_roots(measure: &SingleSpinMeasure, beta: f64, e: &[f64]) -> Result<Vec<f64>> {
    let f = |t: f64| -> Result<f64> {
        let h: Vec<f64> = e.iter().map(|v| beta * t * v).collect();
        Ok(dot(&cumulant_generating(measure, &h)?.gradient, e) - t)
    };
    let n = 2000;
    let mut roots = Vec::new();
    let mut prev_t = 1e-7;
    let mut prev = f(prev_t)?;
    for i in 1..=n {
        let t = i as f64 / n as f64 * (1.0 - 1e-9);
        let v = f(t)?;
        if prev == 0.0 {
            roots.push(prev_t);
        } else if prev.signum() != v.signum() {
            let (mut a, mut b, mut fa) = (prev_t, t, prev);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid)?;
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
                if b - a < 1e-16 {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_t = t;
        prev = v;
    }
    Ok(roots)
}

/// `β` at which `m = 0` loses stability along `axis`, by bisection on the
/// sign of `axis·∇G(β ε axis) - ε` at `ε = 1e-5`.
pub fn bifurcation_beta(measure: &SingleSpinMeasure) -> Result<f64> {
    let e = measure.axis();
    let eps = 1e-5;
    let grows = |beta: f64| -> Result<bool> {
        let h: Vec<f64> = e.iter().map(|v| beta * eps * v).collect();
        Ok(dot(&cumulant_generating(measure, &h)?.gradient, &e) > eps)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while !grows(hi)? {
        lo = hi;
        hi *= 2.0;
        ensure!(hi < 1e6, "no bifurcation found below beta = 1e6");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if grows(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Free energy along the Potts axis, tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeEnergyProfile {
    /// Coupling in the δ-normalization.
    pub beta_delta: f64,
    pub q: usize,
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub minima: Vec<usize>,
    pub maxima: Vec<usize>,
    pub global_min: usize,
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `Σ_k (-β_δ x_k²/2 + x_k log x_k)` at mole fractions
/// `x_1 = (1+(q-1)𝔪)/q`, `x_k = (1-𝔪)/q`.
pub fn potts_axis_free_energy(q: usize, beta_delta: f64, m: f64) -> f64 {
    let qf = q as f64;
    let x1 = (1.0 + (qf - 1.0) * m) / qf;
    let xk = (1.0 - m) / qf;
    -0.5 * beta_delta * (x1 * x1 + (qf - 1.0) * xk * xk) + xlogx(x1) + (qf - 1.0) * xlogx(xk)
}

/// `Φ'(𝔪)` up to the positive factor `(q-1)/q`.
fn potts_axis_slope(q: usize, beta_delta: f64, m: f64) -> f64 {
    let qf = q as f64;
    ((1.0 + (qf - 1.0) * m) / (1.0 - m)).ln() - beta_delta * m
}

/// `n` equally spaced points covering the closed admissible range of `𝔪`.
pub fn potts_axis_grid(q: usize, n: usize) -> Vec<f64> {
    let lo = -1.0 / (q as f64 - 1.0);
    (0..n).map(|i| lo + (1.0 - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn potts_on_axis_profile(q: usize, beta_delta: f64, grid: &[f64]) -> Result<FreeEnergyProfile> {
    ensure!(q >= 2, "Potts needs q >= 2, got {q}");
    ensure!(
        beta_delta >= 0.0 && beta_delta.is_finite(),
        "beta must be finite and >= 0"
    );
    ensure!(grid.len() >= 3, "profile grid needs at least 3 points");
    ensure!(
        grid.windows(2).all(|w| w[0] < w[1]),
        "profile grid must be strictly increasing"
    );
    let lo = -1.0 / (q as f64 - 1.0);
    ensure!(
        grid[0] >= lo - 1e-15 && grid[grid.len() - 1] <= 1.0 + 1e-15,
        "grid leaves the admissible range [{lo}, 1]"
    );
    let phi: Vec<f64> = grid.iter().map(|&m| potts_axis_free_energy(q, beta_delta, m)).collect();
    let (minima, maxima) = classify_extrema(&phi);
    let global_min = (0..phi.len())
        .min_by(|&a, &b| phi[a].total_cmp(&phi[b]))
        .expect("nonempty");
    Ok(FreeEnergyProfile {
        beta_delta,
        q,
        grid: grid.to_vec(),
        phi,
        minima,
        maxima,
        global_min,
    })
}

/// Interior local extrema by comparison with both neighbours.
fn classify_extrema(phi: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    for i in 1..phi.len() - 1 {
        let (a, b, c) = (phi[i - 1], phi[i], phi[i + 1]);
        if b < a && b <= c {
            minima.push(i);
        } else if b > a && b >= c {
            maxima.push(i);
        }
    }
    (minima, maxima)
}

/// Stationary points of the Potts axis free energy in `(0, 1)`, increasing.
fn potts_positive_stationary(q: usize, beta_delta: f64) -> Vec<f64> {
    let n = 20_000;
    let mut roots = Vec::new();
    let f = |m: f64| potts_axis_slope(q, beta_delta, m);
    let mut prev_m = 1e-9;
    let mut prev = f(prev_m);
    for i in 1..=n {
        let m = i as f64 / n as f64 * (1.0 - 1e-12);
        let v = f(m);
        if prev.signum() != v.signum() && prev != 0.0 {
            let (mut a, mut b, mut fa) = (prev_m, m, prev);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
                if b - a < 1e-16 {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_m = m;
        prev = v;
    }
    roots
}

/// Nonzero local minimum of the Potts axis free energy, if any. The slope
/// diverges to `+∞` at `𝔪 = 1`, so the last stationary point is a minimum
/// whenever the slope is negative just before it.
fn potts_secondary_minimum(q: usize, beta_delta: f64) -> Option<f64> {
    let roots = potts_positive_stationary(q, beta_delta);
    let last = *roots.last()?;
    (potts_axis_slope(q, beta_delta, last - 1e-7) < 0.0).then_some(last)
}

/// Largest `𝔪 ∈ (0, 𝔪⁺)` where the axis free energy has a local maximum.
fn potts_hump(q: usize, beta_delta: f64) -> Option<(f64, f64)> {
    let roots = potts_positive_stationary(q, beta_delta);
    if roots.len() < 2 {
        return None;
    }
    let (max, min) = (roots[roots.len() - 2], roots[roots.len() - 1]);
    Some((max, min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PottsTransition {
    pub q: usize,
    /// Spinodal: smallest `β_δ` with a nonzero local minimum.
    pub beta_spinodal: f64,
    /// `β_δ` at which the minima at `0` and `𝔪⁺ > 0` are degenerate.
    pub beta_transition: f64,
    /// `𝔪⁺` at the transition.
    pub m_transition: f64,
}

impl PottsTransition {
    /// The same couplings in the dot-product normalization.
    pub fn to_dot(&self) -> (f64, f64) {
        let f = (self.q as f64 - 1.0) / self.q as f64;
        (self.beta_spinodal * f, self.beta_transition * f)
    }
}

/// Spinodal and first-order point of the mean-field Potts model, in the
/// δ-normalization. For `q = 2` both equal the continuous transition `2`.
pub fn locate_transition(q: usize) -> Result<PottsTransition> {
    ensure!(q >= 2, "Potts needs q >= 2, got {q}");
    let qf = q as f64;
    if q == 2 {
        return Ok(PottsTransition {
            q,
            beta_spinodal: 2.0,
            beta_transition: 2.0,
            m_transition: 0.0,
        });
    }
    // spinodal: bisection on existence of the secondary minimum; at β_δ = q
    // the origin itself turns unstable, so it is the upper bracket
    let exists = |b: f64| potts_secondary_minimum(q, b).is_some();
    let (mut lo, mut hi) = (1.0, qf);
    if exists(lo) || !exists(hi - 1e-9) {
        return Err(Error::Numerical(format!("spinodal bracket [1, {q}] failed")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if exists(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let beta0 = hi;
    // transition: bisection on Φ(0) - Φ(𝔪⁺)
    let gap = |b: f64| -> Option<f64> {
        let m = potts_secondary_minimum(q, b)?;
        Some(potts_axis_free_energy(q, b, 0.0) - potts_axis_free_energy(q, b, m))
    };
    let (mut lo, mut hi) = (beta0, qf - 1e-9);
    match (gap(lo), gap(hi)) {
        (Some(a), Some(b)) if a < 0.0 && b > 0.0 => {}
        _ => return Err(Error::Numerical(format!("transition bracket [{lo}, {hi}] failed"))),
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match gap(mid) {
            Some(g) if g > 0.0 => hi = mid,
            _ => lo = mid,
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let bt = 0.5 * (lo + hi);
    ensure!(bt > beta0, "transition {bt} not above spinodal {beta0}");
    Ok(PottsTransition {
        q,
        beta_spinodal: beta0,
        beta_transition: bt,
        m_transition: potts_secondary_minimum(q, bt).unwrap_or(f64::NAN),
    })
}

/// Grid points of a profile within `band` of its minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibleBand {
    pub beta_delta: f64,
    pub nu: usize,
    pub i_d: f64,
    pub band: f64,
    pub in_band: Vec<bool>,
    /// Maximal runs of admissible grid points as `(first, last)` values.
    pub intervals: Vec<(f64, f64)>,
}

impl AdmissibleBand {
    /// Largest distance between consecutive admissible intervals.
    pub fn largest_gap(&self) -> f64 {
        self.intervals.windows(2).map(|w| w[1].0 - w[0].1).fold(0.0, f64::max)
    }
}

/// Band `νβI_d/2` with `β` the dot-normalized coupling `β_δ(q-1)/q`, applied
/// to a Potts axis profile (the two normalizations differ by a constant).
pub fn admissible_band(profile: &FreeEnergyProfile, i_d: f64) -> Result<AdmissibleBand> {
    if !i_d.is_finite() {
        return Err(Error::NotApplicable("I_d diverges for a recurrent kernel".into()));
    }
    ensure!(i_d >= 0.0, "I_d must be nonnegative");
    let q = profile.q;
    let nu = q - 1;
    let beta_dot = profile.beta_delta * (q as f64 - 1.0) / q as f64;
    let band = nu as f64 * beta_dot * i_d / 2.0;
    let floor = profile.phi[profile.global_min];
    let in_band: Vec<bool> = profile.phi.iter().map(|&p| p <= floor + band).collect();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < in_band.len() {
        if in_band[i] {
            let start = i;
            while i + 1 < in_band.len() && in_band[i + 1] {
                i += 1;
            }
            intervals.push((profile.grid[start], profile.grid[i]));
        }
        i += 1;
    }
    Ok(AdmissibleBand {
        beta_delta: profile.beta_delta,
        nu,
        i_d,
        band,
        in_band,
        intervals,
    })
}

/// Grid resolution used by [`forced_discontinuity_check`].
pub const BAND_GRID_POINTS: usize = 4001;

/// PASS iff for some `β_δ` on a scan (which includes `β_t`) the admissible
/// set on the ordering half-axis `𝔪 ∈ [0, 1]` splits with a gap of at least
/// one grid spacing. A magnetization that grows continuously with `β` from
/// `0` to near `1` would have to cross the gap, so it must jump.
pub fn forced_discontinuity_check(q: usize, i_d: f64) -> Result<Certificate> {
    ensure!(q >= 2, "Potts needs q >= 2, got {q}");
    if !i_d.is_finite() {
        return Err(Error::NotApplicable("I_d diverges for a recurrent kernel".into()));
    }
    let grid: Vec<f64> = (0..BAND_GRID_POINTS)
        .map(|i| i as f64 / (BAND_GRID_POINTS - 1) as f64)
        .collect();
    let resolution = grid[1] - grid[0];
    let tr = locate_transition(q)?;
    let (lo, hi) = (0.5 * tr.beta_spinodal, q as f64 + 1.0);
    let mut betas: Vec<f64> = (0..=200).map(|i| lo + (hi - lo) * i as f64 / 200.0).collect();
    betas.push(tr.beta_transition);
    betas.sort_by(f64::total_cmp);
    let mut best_gap = 0.0;
    let mut best_beta = f64::NAN;
    for &b in &betas {
        let band = admissible_band(&potts_on_axis_profile(q, b, &grid)?, i_d)?;
        let gap = band.largest_gap();
        if gap > best_gap {
            best_gap = gap;
            best_beta = b;
        }
    }
    let band_at_t = admissible_band(&potts_on_axis_profile(q, tr.beta_transition, &grid)?, i_d)?.band;
    let hump = potts_hump(q, tr.beta_transition)
        .map(|(mx, _)| {
            potts_axis_free_energy(q, tr.beta_transition, mx) - potts_axis_free_energy(q, tr.beta_transition, 0.0)
        })
        .unwrap_or(0.0);
    let ok = best_gap >= resolution;
    Ok(Certificate::new("forced-discontinuity")
        .param("q", q as f64)
        .param("I_d", i_d)
        .quantity("beta_spinodal_delta", tr.beta_spinodal)
        .quantity("beta_transition_delta", tr.beta_transition)
        .quantity("band_at_transition", band_at_t)
        .quantity("hump_at_transition", hump)
        .quantity(
            "band_to_hump_ratio",
            if hump > 0.0 { band_at_t / hump } else { f64::INFINITY },
        )
        .quantity("largest_gap", best_gap)
        .quantity("beta_at_largest_gap", best_beta)
        .quantity("resolution", resolution)
        .note("couplings in the delta normalization; band uses beta_dot = beta_delta (q-1)/q")
        .verdict(ok, best_gap - resolution))
}
