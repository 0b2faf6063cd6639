//! Chessboard-estimate consequences for the Gaussian double-well model and
//! the two-kappa gradient model: plaquette z-values, Peierls certificates,
//! Gaussian-domination brute force, and the Fourier block machinery for
//! periodic bond-coupling patterns.

use std::collections::BTreeMap;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Verdict};
use crate::error::{ensure, Error, Result};
use crate::models::{double_well_potential, ModelFamily, ModelSpec};
use crate::quadrature::{grid_mean, h2_ladder, LadderEstimate, QuadratureSpec};
use crate::torus::TorusSpec;

/// Default circuit-counting constant for the Peierls sum.
pub const DEFAULT_PEIERLS_C: f64 = 12.0;

/// Largest side accepted by [`gaussian_pattern_ratio`].
pub const MAX_RATIO_SIDE: usize = 16;

/// Signs of `σ` on the corners of a unit square, indexed by `x + 2y` for the
/// corner `(x, y)`, `x, y ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaquettePattern {
    signs: [i8; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternClass {
    Good,
    Diagonal,
    Stripe,
    ThreeOne,
}

impl PatternClass {
    pub const ALL: [PatternClass; 4] = [
        PatternClass::Good,
        PatternClass::Diagonal,
        PatternClass::Stripe,
        PatternClass::ThreeOne,
    ];

    /// Number of the 16 sign patterns in this class.
    pub fn multiplicity(self) -> usize {
        match self {
            PatternClass::Good | PatternClass::Diagonal => 2,
            PatternClass::Stripe => 4,
            PatternClass::ThreeOne => 8,
        }
    }

    pub fn is_bad(self) -> bool {
        self != PatternClass::Good
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternClass::Good => "good",
            PatternClass::Diagonal => "diagonal",
            PatternClass::Stripe => "stripe",
            PatternClass::ThreeOne => "three-one",
        }
    }
}

impl PlaquettePattern {
    pub fn new(signs: [i8; 4]) -> Result<Self> {
        ensure!(
            signs.iter().all(|&s| s == 1 || s == -1),
            "plaquette signs must be +1 or -1, got {signs:?}"
        );
        Ok(PlaquettePattern { signs })
    }

    pub fn signs(&self) -> [i8; 4] {
        self.signs
    }

    /// All 16 patterns in lexicographic order of the sign string.
    pub fn all() -> Vec<PlaquettePattern> {
        (0..16u8)
            .map(|bits| {
                let mut signs = [1i8; 4];
                for (i, s) in signs.iter_mut().enumerate() {
                    if bits & (8 >> i) != 0 {
                        *s = -1;
                    }
                }
                PlaquettePattern { signs }
            })
            .collect()
    }

    pub fn class(&self) -> PatternClass {
        let minus = self.signs.iter().filter(|&&s| s < 0).count();
        match minus {
            0 | 4 => PatternClass::Good,
            1 | 3 => PatternClass::ThreeOne,
            _ if self.signs[0] == self.signs[3] => PatternClass::Diagonal,
            _ => PatternClass::Stripe,
        }
    }

    /// The sign at site `x` of the periodic configuration obtained by tiling
    /// the plaquette over a two-dimensional torus.
    pub fn sign_at(&self, coords: &[usize]) -> f64 {
        let i = (coords[0] % 2) + 2 * (coords[1] % 2);
        self.signs[i] as f64
    }

    pub fn disseminate(&self, torus: &TorusSpec) -> Vec<f64> {
        torus.sites().map(|s| self.sign_at(&s.0)).collect()
    }
}

impl fmt::Display for PlaquettePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.signs {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for PlaquettePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        ensure!(chars.len() == 4, "plaquette pattern needs four signs, got {s:?}");
        let mut signs = [0i8; 4];
        for (slot, c) in signs.iter_mut().zip(chars) {
            *slot = match c {
                '+' => 1,
                '-' => -1,
                _ => return Err(Error::validation(format!("bad sign {c:?} in pattern {s:?}"))),
            };
        }
        Ok(PlaquettePattern { signs })
    }
}

fn check_beta_kappa(beta: f64, kappa: f64) -> Result<()> {
    ensure!(beta.is_finite() && beta > 0.0, "beta must be positive, got {beta}");
    ensure!(kappa.is_finite() && kappa > 0.0, "kappa must be positive, got {kappa}");
    Ok(())
}

/// Closed-form z-value bound of a pattern class.
pub fn class_zvalue(class: PatternClass, beta: f64, kappa: f64) -> Result<f64> {
    check_beta_kappa(beta, kappa)?;
    Ok(match class {
        PatternClass::Good => 1.0,
        PatternClass::Diagonal => (-4.0 * beta * kappa / (8.0 * beta + kappa)).exp(),
        PatternClass::Stripe => (-2.0 * beta * kappa / (4.0 * beta + kappa)).exp(),
        // e^{-2βκ/(8β+κ)}, taken as the root of the diagonal value
        PatternClass::ThreeOne => class_zvalue(PatternClass::Diagonal, beta, kappa)?.sqrt(),
    })
}

pub fn pattern_zvalue(pattern: PlaquettePattern, beta: f64, kappa: f64) -> Result<f64> {
    class_zvalue(pattern.class(), beta, kappa)
}

/// Sum of the z-values over the 14 bad patterns.
pub fn bad_event_bound(beta: f64, kappa: f64) -> Result<f64> {
    let mut z = 0.0;
    for class in PatternClass::ALL.into_iter().filter(|c| c.is_bad()) {
        z += class.multiplicity() as f64 * class_zvalue(class, beta, kappa)?;
    }
    Ok(z)
}

/// `NN` quadratic form `Σ_{x, j} (φ_x - φ_{x+e_j})²` as a dense matrix.
fn gradient_form(torus: &TorusSpec) -> DMatrix<f64> {
    let n = torus.volume();
    let mut q = DMatrix::zeros(n, n);
    for x in 0..n {
        for j in 0..torus.dim() {
            let mut e = vec![0i64; torus.dim()];
            e[j] = 1;
            let y = torus.shift(x, &e);
            q[(x, x)] += 1.0;
            q[(y, y)] += 1.0;
            q[(x, y)] -= 1.0;
            q[(y, x)] -= 1.0;
        }
    }
    q
}

/// Per-site Gaussian ratio `[E(e^{-κΣφσ}) / E(e^{-κΣφ})]^{1/N}` under the
/// massive free field with precision `βΔ + κ` on the `L × L` torus, where
/// `σ` is the tiled pattern.
pub fn gaussian_pattern_ratio(pattern: PlaquettePattern, beta: f64, kappa: f64, side: usize) -> Result<f64> {
    ensure!(
        kappa > 0.0,
        "kappa must be positive: the zero mode is singular at kappa = 0"
    );
    check_beta_kappa(beta, kappa)?;
    ensure!(
        side <= MAX_RATIO_SIDE,
        "side {side} too large for a dense covariance (max {MAX_RATIO_SIDE})"
    );
    let torus = TorusSpec::new(2, side)?;
    let n = torus.volume();
    let mut precision = gradient_form(&torus) * beta;
    for i in 0..n {
        precision[(i, i)] += kappa;
    }
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Numerical("massive free-field precision not positive definite".into()))?;
    let sigma = DVector::from_vec(pattern.disseminate(&torus));
    let ones = DVector::from_element(n, 1.0);
    let var_sigma = sigma.dot(&chol.solve(&sigma));
    let var_ones = ones.dot(&chol.solve(&ones));
    Ok((0.5 * kappa * kappa * (var_sigma - var_ones) / n as f64).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeierlsCertificate {
    pub parameters: BTreeMap<String, f64>,
    pub per_pattern_z: BTreeMap<String, f64>,
    pub z_bad: f64,
    pub c: f64,
    /// `Σ_{n≥1} (c z)^n`, absent when the series diverges.
    pub peierls_sum: Option<f64>,
    /// `2 c z(B)`, the bound on the disagreement probability.
    pub disagreement_bound: f64,
    pub verdict: Verdict,
    pub margin: f64,
}

impl PeierlsCertificate {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn to_certificate(&self) -> Certificate {
        let mut cert = Certificate::new("peierls")
            .quantity("per_pattern_z", &self.per_pattern_z)
            .quantity("z_bad", self.z_bad)
            .quantity("c", self.c)
            .quantity("peierls_sum", self.peierls_sum)
            .quantity("disagreement_bound", self.disagreement_bound)
            .verdict(self.passed(), self.margin);
        cert.parameters = self.parameters.clone();
        cert
    }
}

/// PASS iff `c z(B) < 1/2` and the disagreement bound `2 c z(B)` is at most
/// `1/4`; the margin is `1/4 - 2 c z(B)`.
pub fn peierls_certificate(beta: f64, kappa: f64, c: f64) -> Result<PeierlsCertificate> {
    check_beta_kappa(beta, kappa)?;
    ensure!(c.is_finite() && c > 1.0, "circuit constant must exceed 1, got {c}");
    let mut per_pattern_z = BTreeMap::new();
    for class in PatternClass::ALL {
        per_pattern_z.insert(class.name().to_string(), class_zvalue(class, beta, kappa)?);
    }
    let z_bad = bad_event_bound(beta, kappa)?;
    let cz = c * z_bad;
    let peierls_sum = (cz < 1.0).then(|| cz / (1.0 - cz));
    let disagreement_bound = 2.0 * cz;
    let margin = 0.25 - disagreement_bound;
    let ok = cz < 0.5 && disagreement_bound <= 0.25;
    let parameters = BTreeMap::from([("beta".to_string(), beta), ("kappa".to_string(), kappa)]);
    Ok(PeierlsCertificate {
        parameters,
        per_pattern_z,
        z_bad,
        c,
        peierls_sum,
        disagreement_bound,
        verdict: Verdict::from_bool(ok),
        margin,
    })
}

/// Gauss-Legendre rule for the per-site height integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationQuadrature {
    pub nodes: usize,
    pub half_width: f64,
    /// Relative disagreement allowed between `Z(0)` on `nodes` and on a
    /// finer rule.
    pub tolerance: f64,
}

impl Default for DominationQuadrature {
    fn default() -> Self {
        DominationQuadrature {
            nodes: 64,
            half_width: 4.0,
            tolerance: 1e-10,
        }
    }
}

/// Slack allowed in `Z(h) ≤ Z(0)`.
pub const DOMINATION_SLACK: f64 = 1e-9;

fn legendre_rule(nodes: usize, half_width: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes).expect("nodes > 0"));
    rule.iter().map(|(t, w)| (t * half_width, w * half_width)).unzip()
}

/// `Z(h) = ∫ Π e^{-V(φ_x)} dφ_x exp{-β Σ_{x,j} (φ_x - φ_{x+e_j} + h_x - h_{x+e_j})²}`
/// by quadrature: a transfer-matrix trace on rings, a tensor sum on tori
/// with at most four sites.
pub fn double_well_partition(
    beta: f64,
    kappa: f64,
    torus: &TorusSpec,
    h: &[f64],
    quad: &DominationQuadrature,
) -> Result<f64> {
    let (t, w) = legendre_rule(quad.nodes, quad.half_width);
    let m = t.len();
    let site: Vec<f64> = t
        .iter()
        .zip(&w)
        .map(|(&x, &wx)| wx * (-double_well_potential(x, kappa)).exp())
        .collect();
    let bond = |dh: f64| -> Vec<f64> {
        let mut b = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let g = t[i] - t[j] + dh;
                b[i * m + j] = (-beta * g * g).exp();
            }
        }
        b
    };
    let n = torus.volume();
    if torus.dim() == 1 {
        let mut acc = DMatrix::<f64>::identity(m, m);
        for x in 0..n {
            let y = (x + 1) % n;
            let b = bond(h[x] - h[y]);
            let tm = DMatrix::from_fn(m, m, |i, j| site[i].sqrt() * b[i * m + j] * site[j].sqrt());
            acc *= tm;
        }
        return Ok(acc.trace());
    }
    // Small tensor grid: bonds as (x, x + e_j) pairs with their factor tables.
    let mut bonds = Vec::new();
    for x in 0..n {
        for j in 0..torus.dim() {
            let mut e = vec![0i64; torus.dim()];
            e[j] = 1;
            let y = torus.shift(x, &e);
            bonds.push((x, y, bond(h[x] - h[y])));
        }
    }
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut sum = 0.0;
            loop {
                let mut v: f64 = idx.iter().map(|&i| site[i]).product();
                for (x, y, b) in &bonds {
                    v *= b[idx[*x] * m + idx[*y]];
                }
                sum += v;
                let mut p = n - 1;
                loop {
                    if p == 0 {
                        return sum;
                    }
                    idx[p] += 1;
                    if idx[p] < m {
                        break;
                    }
                    idx[p] = 0;
                    p -= 1;
                }
            }
        })
        .collect();
    Ok(partial.iter().sum())
}

/// Seeded perturbations with entries uniform in `[-1, 1]`.
pub fn seeded_h_samples(torus: &TorusSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..torus.volume()).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Checks `Z(h) ≤ Z(0)(1 + 1e-9)` for each supplied `h` by direct
/// quadrature. Also records `Z(h + c) / Z(h)` for a constant shift.
pub fn gaussian_domination_bruteforce(
    model: &ModelSpec,
    beta: f64,
    torus: &TorusSpec,
    h_samples: &[Vec<f64>],
    quad: &DominationQuadrature,
) -> Result<Certificate> {
    let kappa = match model.family() {
        ModelFamily::GaussianDoubleWell { kappa } => *kappa,
        other => {
            return Err(Error::NotApplicable(format!(
                "Gaussian domination brute force needs the double-well model, got {other:?}"
            )))
        }
    };
    check_beta_kappa(beta, kappa)?;
    let n = torus.volume();
    ensure!(
        torus.dim() == 1 && n <= 8 || torus.dim() == 2 && torus.side() == 2,
        "brute force supports rings with at most 8 sites and the 2x2 torus"
    );
    ensure!(
        quad.nodes >= 64,
        "need at least 64 quadrature nodes, got {}",
        quad.nodes
    );
    ensure!(quad.half_width > 0.0, "quadrature half width must be positive");
    ensure!(!h_samples.is_empty(), "no perturbations supplied");
    for h in h_samples {
        ensure!(h.len() == n, "perturbation has {} entries for {n} sites", h.len());
        ensure!(h.iter().all(|v| v.is_finite()), "perturbation entries must be finite");
    }

    let zero = vec![0.0; n];
    let z0 = double_well_partition(beta, kappa, torus, &zero, quad)?;
    let finer = DominationQuadrature {
        nodes: quad.nodes + 16,
        ..*quad
    };
    let z0_fine = double_well_partition(beta, kappa, torus, &zero, &finer)?;
    let drift = (z0_fine - z0).abs() / z0;
    if !(z0 > 0.0) || !(drift <= quad.tolerance) {
        return Err(Error::Tolerance(format!(
            "Z(0) = {z0:e} moves by {drift:e} between {} and {} nodes",
            quad.nodes, finer.nodes
        )));
    }

    let mut ratios = Vec::with_capacity(h_samples.len());
    for h in h_samples {
        ratios.push(double_well_partition(beta, kappa, torus, h, quad)? / z0);
    }
    let shifted: Vec<f64> = h_samples[0].iter().map(|v| v + 0.625).collect();
    let z_h0 = ratios[0] * z0;
    let shift_ratio = double_well_partition(beta, kappa, torus, &shifted, quad)? / z_h0;

    let worst = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let margin = 1.0 + DOMINATION_SLACK - worst;
    let ok = ratios.iter().all(|&r| r <= 1.0 + DOMINATION_SLACK);
    Ok(Certificate::new("gaussian-domination")
        .param("beta", beta)
        .param("kappa", kappa)
        .param("dim", torus.dim() as f64)
        .param("side", torus.side() as f64)
        .param("nodes", quad.nodes as f64)
        .param("half_width", quad.half_width)
        .quantity("z0", z0)
        .quantity("z0_refinement_drift", drift)
        .quantity("ratios", &ratios)
        .quantity("max_ratio", worst)
        .quantity("constant_shift_ratio", shift_ratio)
        .verdict(ok, margin))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Largest torus accepted by [`conditional_gaussian_stats`].
pub const MAX_CONDITIONAL_SITES: usize = 4096;

/// Law of the heights given the signs: Gaussian with mean `κ P^{-1} σ` and
/// covariance `P^{-1}`, `P = 2βΔ + κ`.
pub fn conditional_gaussian_stats(sigma: &[f64], beta: f64, kappa: f64, torus: &TorusSpec) -> Result<ConditionalStats> {
    check_beta_kappa(beta, kappa)?;
    let n = torus.volume();
    ensure!(
        n <= MAX_CONDITIONAL_SITES,
        "torus with {n} sites too large for a dense solve (max {MAX_CONDITIONAL_SITES})"
    );
    ensure!(
        sigma.len() == n,
        "sign configuration has {} entries for {n} sites",
        sigma.len()
    );
    ensure!(
        sigma.iter().all(|&s| s == 1.0 || s == -1.0),
        "sign configuration entries must be +1 or -1"
    );
    let mut p = gradient_form(torus) * (2.0 * beta);
    for i in 0..n {
        p[(i, i)] += kappa;
    }
    let chol = p
        .cholesky()
        .ok_or_else(|| Error::Numerical("conditional precision not positive definite".into()))?;
    let mean = chol.solve(&DVector::from_column_slice(sigma)) * kappa;
    // Translation invariance makes the variance the same at every site.
    let var = torus
        .reciprocal_grid()
        .iter()
        .map(|k| {
            let d: f64 = k.k.iter().map(|&kj| 2.0 - 2.0 * kj.cos()).sum();
            1.0 / (2.0 * beta * d + kappa)
        })
        .sum::<f64>()
        / n as f64;
    Ok(ConditionalStats {
        mean: mean.as_slice().to_vec(),
        variance: vec![var; n],
    })
}

fn check_kappas(kappa_o: f64, kappa_d: f64) -> Result<()> {
    ensure!(
        kappa_o.is_finite() && kappa_o > 0.0,
        "kappa_o must be positive, got {kappa_o}"
    );
    ensure!(
        kappa_d.is_finite() && kappa_d > 0.0,
        "kappa_d must be positive, got {kappa_d}"
    );
    Ok(())
}

/// The 2×2 block coupling `k` and `k + π e_1` for the pattern whose
/// vertical bonds alternate between the two kappas column by column.
pub fn gradient_block(k: [f64; 2], kappa_o: f64, kappa_d: f64) -> [[f64; 2]; 2] {
    let (c1, c2) = (k[0].cos(), k[1].cos());
    let a_minus = 2.0 - 2.0 * c1;
    let a_plus = 2.0 + 2.0 * c1;
    let b_minus = 2.0 - 2.0 * c2;
    let mean = 0.5 * (kappa_o + kappa_d);
    let off = 0.5 * (kappa_o - kappa_d) * b_minus;
    [
        [kappa_o * a_minus + mean * b_minus, off],
        [off, kappa_o * a_plus + mean * b_minus],
    ]
}

pub fn gradient_block_determinant(k: [f64; 2], kappa_o: f64, kappa_d: f64) -> Result<f64> {
    check_kappas(kappa_o, kappa_d)?;
    let p = gradient_block(k, kappa_o, kappa_d);
    Ok(p[0][0] * p[1][1] - p[0][1] * p[1][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientPattern {
    /// Every bond carries `κ_O`.
    AllO,
    /// Every bond carries `κ_D`.
    AllD,
    /// Three `κ_O` bonds and one `κ_D` bond per plaquette.
    ThreeOne,
}

impl GradientPattern {
    /// Fractions of `κ_O` and `κ_D` bonds.
    pub fn bond_fractions(self) -> (f64, f64) {
        match self {
            GradientPattern::AllO => (1.0, 0.0),
            GradientPattern::AllD => (0.0, 1.0),
            GradientPattern::ThreeOne => (0.75, 0.25),
        }
    }
}

pub fn gradient_default_quadrature() -> QuadratureSpec {
    QuadratureSpec::for_dim(2).with_points(128).with_tolerance(1e-6)
}

/// Per-site Gaussian free energy of a pattern: `½∫ log(κ D̂(k))` for the
/// homogeneous ones and `¼∫ log det Π(k)` for the three-one pattern, with
/// midpoint grids that avoid `k = 0`.
pub fn gradient_pattern_free_energy(
    pattern: GradientPattern,
    kappa_o: f64,
    kappa_d: f64,
    quad: &QuadratureSpec,
) -> Result<LadderEstimate> {
    check_kappas(kappa_o, kappa_d)?;
    quad.validate(2)?;
    let grid = quad.ladder();
    let values: Vec<f64> = grid
        .iter()
        .map(|&n| match pattern {
            GradientPattern::AllO | GradientPattern::AllD => {
                let kappa = if pattern == GradientPattern::AllO {
                    kappa_o
                } else {
                    kappa_d
                };
                0.5 * grid_mean(2, n, |k| (kappa * (4.0 - 2.0 * k[0].cos() - 2.0 * k[1].cos())).ln())
            }
            GradientPattern::ThreeOne => {
                0.25 * grid_mean(2, n, |k| {
                    let p = gradient_block([k[0], k[1]], kappa_o, kappa_d);
                    (p[0][0] * p[1][1] - p[0][1] * p[1][0]).ln()
                })
            }
        })
        .collect();
    let est = h2_ladder(grid, values);
    if !est.estimate.is_finite() || est.error > quad.tolerance {
        return Err(Error::Tolerance(format!(
            "gradient free energy {} with error indicator {:e} on grids {:?}",
            est.estimate, est.error, est.grid
        )));
    }
    Ok(est)
}

/// Log z-value per site of a pattern: the a priori bond weights (`p` per
/// `κ_O` bond, `1 - p` per `κ_D` bond, two bonds per site) minus the free
/// energy.
pub fn gradient_pattern_log_z(
    pattern: GradientPattern,
    kappa_o: f64,
    kappa_d: f64,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    ensure!((0.0..=1.0).contains(&p), "p must lie in [0, 1], got {p}");
    let (fo, fd) = pattern.bond_fractions();
    let mut w = 0.0;
    if fo > 0.0 {
        w += 2.0 * fo * p.ln();
    }
    if fd > 0.0 {
        w += 2.0 * fd * (1.0 - p).ln();
    }
    Ok(w - gradient_pattern_free_energy(pattern, kappa_o, kappa_d, quad)?.estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientExcess {
    pub kappa_o: f64,
    pub kappa_d: f64,
    pub free_energy_o: f64,
    pub free_energy_d: f64,
    pub free_energy_three_one: f64,
    /// `F_31 - ¾ F_O - ¼ F_D`; the bond weights cancel out of it for every `p`.
    pub excess: f64,
    pub error: f64,
}

pub fn gradient_bad_pattern_excess(kappa_o: f64, kappa_d: f64, quad: &QuadratureSpec) -> Result<GradientExcess> {
    let fo = gradient_pattern_free_energy(GradientPattern::AllO, kappa_o, kappa_d, quad)?;
    let fd = gradient_pattern_free_energy(GradientPattern::AllD, kappa_o, kappa_d, quad)?;
    let f31 = gradient_pattern_free_energy(GradientPattern::ThreeOne, kappa_o, kappa_d, quad)?;
    Ok(GradientExcess {
        kappa_o,
        kappa_d,
        free_energy_o: fo.estimate,
        free_energy_d: fd.estimate,
        free_energy_three_one: f31.estimate,
        excess: f31.estimate - 0.75 * fo.estimate - 0.25 * fd.estimate,
        error: f31.error + 0.75 * fo.error + 0.25 * fd.error,
    })
}

/// `p_t` with `p_t / (1 - p_t) = (κ_D / κ_O)^{1/4}`.
///
/// The smaller of the two weights is divided and the larger one obtained as
/// a complement, so swapping the kappas gives exactly `1 - p_t`.
pub fn duality_pt(kappa_o: f64, kappa_d: f64) -> Result<f64> {
    check_kappas(kappa_o, kappa_d)?;
    let a = kappa_d.powf(0.25);
    let b = kappa_o.powf(0.25);
    let s = a + b;
    Ok(if a <= b { a / s } else { 1.0 - b / s })
}

/// Finite-torus Gaussian ratio next to the closed-form z-value for one
/// representative of each class.
pub fn gaussian_ratio_table(beta: f64, kappa: f64, side: usize) -> Result<Vec<(PatternClass, f64, f64)>> {
    let reps = ["++++", "+--+", "++--", "+-++"];
    reps.iter()
        .map(|r| {
            let p: PlaquettePattern = r.parse()?;
            Ok((
                p.class(),
                gaussian_pattern_ratio(p, beta, kappa, side)?,
                pattern_zvalue(p, beta, kappa)?,
            ))
        })
        .collect()
}
