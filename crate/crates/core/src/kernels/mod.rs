//! Translation-invariant coupling kernels `J_{0,x}` on `Z^d`, normalized so
//! that `Σ_x J_{0,x} = 1` and `J_{0,0} = 0`, with ℓ1 distances throughout.

mod periodize;
mod random_walk;
pub mod special;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure, Error, Result};
use crate::torus::centered_angle;

pub use periodize::{periodize, periodize_to_tolerance, CouplingMatrix, DEFAULT_TAIL_TOLERANCE};
pub use random_walk::{
    harmonic_escape_profile, mean_field_error_integral, simulate_walk_returns, torus_greens, transience_integral,
    HarmonicProfile, Integral, TorusGreens, WalkEstimate,
};

pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    NearestNeighbor,
    Yukawa { mu: f64 },
    PowerLaw { s: f64 },
    Mixture { parts: Vec<(f64, KernelSpec)> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct RawKernel {
    dim: usize,
    #[serde(flatten)]
    kind: KernelKind,
}

/// A validated, normalized kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel")]
pub struct KernelSpec {
    dim: usize,
    #[serde(flatten)]
    kind: KernelKind,
    /// The constant `C` in front of the unnormalized profile.
    #[serde(skip_deserializing)]
    norm: f64,
    #[serde(skip)]
    series: Option<special::CosinePowerSeries>,
}

impl TryFrom<RawKernel> for KernelSpec {
    type Error = Error;
    fn try_from(raw: RawKernel) -> Result<Self> {
        KernelSpec::new(raw.dim, raw.kind)
    }
}

impl KernelSpec {
    pub fn new(dim: usize, kind: KernelKind) -> Result<Self> {
        ensure!(
            (1..=MAX_DIM).contains(&dim),
            "kernel dimension must lie in 1..={MAX_DIM}, got {dim}"
        );
        let norm = match &kind {
            KernelKind::NearestNeighbor => 1.0 / (2 * dim) as f64,
            KernelKind::Yukawa { mu } => {
                ensure!(mu.is_finite() && *mu > 0.0, "Yukawa mass must be positive, got {mu}");
                1.0 / ((0.5 * mu).tanh().recip().powi(dim as i32) - 1.0)
            }
            KernelKind::PowerLaw { s } => {
                ensure!(
                    s.is_finite() && *s > dim as f64,
                    "power-law exponent must exceed the dimension {dim}, got {s}"
                );
                1.0 / special::l1_power_sum(dim, *s)
            }
            KernelKind::Mixture { parts } => {
                ensure!(!parts.is_empty(), "mixture needs at least one component");
                let mut total = 0.0;
                for (w, k) in parts {
                    ensure!(w.is_finite() && *w > 0.0, "mixture weights must be positive, got {w}");
                    ensure!(k.dim == dim, "mixture component has dimension {} != {dim}", k.dim);
                    total += w;
                }
                ensure!((total - 1.0).abs() < 1e-12, "mixture weights sum to {total}, not 1");
                1.0
            }
        };
        ensure!(
            norm.is_finite() && norm > 0.0,
            "kernel normalization failed for {kind:?}"
        );
        let series = match kind {
            KernelKind::PowerLaw { s } if dim == 1 && s.fract() != 0.0 => Some(special::CosinePowerSeries::new(s)),
            _ => None,
        };
        Ok(KernelSpec {
            dim,
            kind,
            norm,
            series,
        })
    }

    pub fn nearest_neighbor(dim: usize) -> Result<Self> {
        Self::new(dim, KernelKind::NearestNeighbor)
    }

    pub fn yukawa(dim: usize, mu: f64) -> Result<Self> {
        Self::new(dim, KernelKind::Yukawa { mu })
    }

    pub fn power_law(dim: usize, s: f64) -> Result<Self> {
        Self::new(dim, KernelKind::PowerLaw { s })
    }

    pub fn mixture(dim: usize, parts: Vec<(f64, KernelSpec)>) -> Result<Self> {
        Self::new(dim, KernelKind::Mixture { parts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        matches!(self.kind, KernelKind::NearestNeighbor)
    }

    /// Largest ℓ1 range of the couplings, if finite.
    pub fn range(&self) -> Option<u64> {
        match &self.kind {
            KernelKind::NearestNeighbor => Some(1),
            KernelKind::Mixture { parts } => parts
                .iter()
                .map(|(_, k)| k.range())
                .try_fold(0, |acc, r| r.map(|r| acc.max(r))),
            _ => None,
        }
    }

    /// `J_{0,x}` as a function of the ℓ1 norm `r = |x|_1`.
    pub fn radial(&self, r: u64) -> f64 {
        if r == 0 {
            return 0.0;
        }
        match &self.kind {
            KernelKind::NearestNeighbor => {
                if r == 1 {
                    self.norm
                } else {
                    0.0
                }
            }
            KernelKind::Yukawa { mu } => self.norm * (-mu * r as f64).exp(),
            KernelKind::PowerLaw { s } => self.norm * (r as f64).powf(-s),
            KernelKind::Mixture { parts } => parts.iter().map(|(w, k)| w * k.radial(r)).sum(),
        }
    }

    /// `J_{0,x}`.
    pub fn coupling(&self, x: &[i64]) -> f64 {
        self.radial(x.iter().map(|c| c.unsigned_abs()).sum())
    }

    /// Total coupling mass on the ℓ1 sphere of radius `r`.
    pub fn shell_mass(&self, r: u64) -> f64 {
        if r == 0 {
            0.0
        } else {
            special::l1_sphere_count(self.dim, r) * self.radial(r)
        }
    }

    /// Coupling mass strictly outside the ℓ1 ball of radius `r`.
    pub fn tail_mass(&self, r: u64) -> f64 {
        match &self.kind {
            KernelKind::NearestNeighbor => {
                if r >= 1 {
                    0.0
                } else {
                    1.0
                }
            }
            KernelKind::Mixture { parts } => parts.iter().map(|(w, k)| w * k.tail_mass(r)).sum(),
            _ => {
                let inside: f64 = (1..=r).map(|q| self.shell_mass(q)).sum();
                (1.0 - inside).max(0.0)
            }
        }
    }

    /// `Ĵ(k) = Σ_x J_{0,x} e^{i k·x}`.
    pub fn fourier_transform(&self, k: &[f64]) -> f64 {
        1.0 - self.one_minus_hat(k)
    }

    /// `1 - Ĵ(k)`, evaluated without cancellation near `k = 0`.
    pub fn one_minus_hat(&self, k: &[f64]) -> f64 {
        debug_assert_eq!(k.len(), self.dim);
        match &self.kind {
            KernelKind::NearestNeighbor => {
                2.0 / self.dim as f64 * k.iter().map(|&kj| (0.5 * kj).sin().powi(2)).sum::<f64>()
            }
            KernelKind::Yukawa { mu } => self.norm * yukawa_deficit(*mu, k),
            KernelKind::PowerLaw { s } => match &self.series {
                Some(series) => 2.0 * self.norm * series.eval(centered_angle(k[0].rem_euclid(2.0 * PI))),
                None => self.norm * power_law_deficit(*s, k),
            },
            KernelKind::Mixture { parts } => parts.iter().map(|(w, kern)| w * kern.one_minus_hat(k)).sum(),
        }
    }
}

/// `Σ_{x != 0} e^{-μ|x|_1} (1 - e^{ik·x}) = P(0)^d - Π_j P(k_j)` with
/// `P(k) = sinh μ / (cosh μ - cos k)`, summed telescopically so that each
/// term carries an explicit `sin^2(k_j / 2)` factor.
fn yukawa_deficit(mu: f64, k: &[f64]) -> f64 {
    let sh = (0.5 * mu).sinh();
    let a = 2.0 * sh * sh; // cosh μ - 1
    let sinh_mu = mu.sinh();
    let p0 = sinh_mu / a;
    let d = k.len();
    let p: Vec<f64> = k
        .iter()
        .map(|&kj| sinh_mu / (a + 2.0 * (0.5 * kj).sin().powi(2)))
        .collect();
    let mut total = 0.0;
    for j in 0..d {
        let s2 = 2.0 * (0.5 * k[j]).sin().powi(2);
        if s2 == 0.0 {
            continue;
        }
        let diff = sinh_mu * s2 / (a * (a + s2));
        let left: f64 = p[..j].iter().product();
        total += diff * left * p0.powi((d - 1 - j) as i32);
    }
    total
}

/// `Σ_{x != 0} |x|_1^{-s} (1 - e^{ik·x})` through the representation
/// `r^{-s} = Γ(s)^{-1} ∫ t^{s-1} e^{-tr} dt`, which turns the lattice sum into
/// a superposition of Yukawa sums. The outer integral runs over `u = ln t`
/// with the trapezoid rule.
fn power_law_deficit(s: f64, k: &[f64]) -> f64 {
    if k.iter().all(|&kj| (0.5 * kj).sin() == 0.0) {
        return 0.0;
    }
    let d = k.len() as f64;
    let (u_min, u_max, h) = (-60.0, (60.0 + 2.0 * s).ln(), 0.125);
    let steps = ((u_max - u_min) / h).ceil() as usize;
    let mut acc = 0.0;
    for i in 0..=steps {
        let u = u_min + i as f64 * h;
        let t = u.exp();
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += w * (s * u).exp() * yukawa_deficit(t, k);
    }
    // below u_min the integrand is 2^d e^{(s-d)u} to relative order t^2
    let tail = 2f64.powf(d) * ((s - d) * u_min).exp() / (s - d);
    (acc * h + tail) / gamma(s)
}
