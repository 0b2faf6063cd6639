//! Spin-wave free energies `F(θ) = ½ ∫ log D_k(θ) dk/(2π)^d` for the orbital
//! compass, 120-degree and nearest/next-nearest antiferromagnet models.
//!
//! Every integrand has the form `A(k') - B(k') cos k_j` in one coordinate
//! `k_j`, so that axis is integrated exactly with
//! `∫ log(A - B cos k) dk/2π = log((A + sqrt(A² - B²))/2)`; the remaining
//! axes use the midpoint ladder with an `h²` Richardson step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::{grid_mean, h2_ladder, LadderEstimate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SpinWaveFamily {
    /// Two-dimensional orbital compass model.
    Compass,
    /// Three-dimensional 120-degree model.
    OneTwenty,
    /// Nearest/next-nearest neighbour antiferromagnet in `d = 2`.
    Afm { gamma: f64 },
}

impl SpinWaveFamily {
    pub fn validate(&self) -> Result<()> {
        if let SpinWaveFamily::Afm { gamma } = self {
            ensure!(gamma.abs() < 2.0, "antiferromagnet needs |gamma| < 2, got {gamma}");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SpinWaveFamily::OneTwenty => 3,
            _ => 2,
        }
    }

    /// Default ladder for the axes that are not integrated exactly.
    pub fn default_quadrature(&self) -> QuadratureSpec {
        let n = if self.dim() == 2 { 512 } else { 64 };
        QuadratureSpec::for_dim(self.dim() - 1)
            .with_points(n)
            .with_tolerance(1e-4)
    }
}

type AxisSplit<'a> = Box<dyn Fn(&[f64]) -> (f64, f64, f64) + Sync + 'a>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinWaveIntegrand {
    #[serde(flatten)]
    pub family: SpinWaveFamily,
    pub theta: f64,
}

/// `|1 - e^{ik}|² = 2 - 2 cos k`.
fn modulus(k: f64) -> f64 {
    2.0 - 2.0 * k.cos()
}

/// 120-degree weights `q_α(θ) = sin²(θ - φ_α)`, `φ = 0, 120°, -120°`.
pub fn one_twenty_weights(theta: f64) -> [f64; 3] {
    let t = 2.0 * PI / 3.0;
    [
        theta.sin().powi(2),
        (theta - t).sin().powi(2),
        (theta + t).sin().powi(2),
    ]
}

impl SpinWaveIntegrand {
    pub fn new(family: SpinWaveFamily, theta: f64) -> Result<Self> {
        family.validate()?;
        ensure!(theta.is_finite(), "theta must be finite");
        Ok(SpinWaveIntegrand { family, theta })
    }

    /// `D_k(θ)` at a point of the Brillouin zone.
    pub fn value(&self, k: &[f64]) -> f64 {
        let th = self.theta;
        match self.family {
            SpinWaveFamily::Compass => th.sin().powi(2) * modulus(k[0]) + th.cos().powi(2) * modulus(k[1]),
            SpinWaveFamily::OneTwenty => {
                let q = one_twenty_weights(th);
                (0..3).map(|a| q[a] * modulus(k[a])).sum()
            }
            SpinWaveFamily::Afm { gamma } => {
                modulus(k[0] + k[1]) + modulus(k[0] - k[1]) + gamma * th.cos() * (modulus(k[0]) - modulus(k[1]))
            }
        }
    }

    /// Splits `D` as `A(k') - B(k') cos k_j`: returns the exact axis `j` and a
    /// function of the other coordinates giving `(A, A - B, A + B)`.
    fn split(&self) -> (usize, AxisSplit<'_>) {
        let th = self.theta;
        match self.family {
            SpinWaveFamily::Compass => {
                let (s2, c2) = (th.sin().powi(2), th.cos().powi(2));
                // the axis with the larger weight keeps A - B away from zero
                if c2 >= s2 {
                    (
                        1,
                        Box::new(move |k: &[f64]| {
                            let rest = s2 * modulus(k[0]);
                            (rest + 2.0 * c2, rest, rest + 4.0 * c2)
                        }),
                    )
                } else {
                    (
                        0,
                        Box::new(move |k: &[f64]| {
                            let rest = c2 * modulus(k[0]);
                            (rest + 2.0 * s2, rest, rest + 4.0 * s2)
                        }),
                    )
                }
            }
            SpinWaveFamily::OneTwenty => {
                let q = one_twenty_weights(th);
                let j = (0..3).max_by(|&a, &b| q[a].total_cmp(&q[b])).expect("three axes");
                let others: Vec<usize> = (0..3).filter(|&a| a != j).collect();
                (
                    j,
                    Box::new(move |k: &[f64]| {
                        let rest = q[others[0]] * modulus(k[0]) + q[others[1]] * modulus(k[1]);
                        (rest + 2.0 * q[j], rest, rest + 4.0 * q[j])
                    }),
                )
            }
            SpinWaveFamily::Afm { gamma } => {
                // D = 4 - 4 cos k1 cos k2 + 2γ cos θ (cos k2 - cos k1)
                let g = 2.0 * gamma * th.cos();
                (
                    1,
                    Box::new(move |k: &[f64]| {
                        let c1 = k[0].cos();
                        let a = 4.0 - g * c1;
                        (a, (4.0 + g) * (1.0 - c1), (4.0 - g) * (1.0 + c1))
                    }),
                )
            }
        }
    }

    /// Integrand after the exact integration over one axis.
    fn reduced(&self) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        let (_, split) = self.split();
        move |k: &[f64]| {
            let (a, amb, apb) = split(k);
            ((a + (amb * apb).max(0.0).sqrt()) / 2.0).ln()
        }
    }
}

/// `∫ log(α - β cos k) dk/2π` for `α >= |β|`.
pub fn log_cosine_integral(alpha: f64, beta: f64) -> f64 {
    ((alpha + (alpha * alpha - beta * beta).max(0.0).sqrt()) / 2.0).ln()
}

/// `F(θ)` with its refinement ladder.
pub fn sw_free_energy(integrand: &SpinWaveIntegrand, quad: &QuadratureSpec) -> Result<LadderEstimate> {
    let outer = integrand.family.dim() - 1;
    quad.validate(outer)?;
    let f = integrand.reduced();
    let grid = quad.ladder();
    let values: Vec<f64> = grid.iter().map(|&n| 0.5 * grid_mean(outer, n, &f)).collect();
    let est = h2_ladder(grid, values);
    if est.error > quad.tolerance {
        return Err(Error::Tolerance(format!(
            "spin-wave free energy {} with error indicator {:e} on grids {:?}",
            est.estimate, est.error, est.grid
        )));
    }
    Ok(est)
}

/// Plain midpoint value of `F(θ)` on `n` points per axis of the full
/// `d`-dimensional zone, without the exact axis. Used as a cross-check.
pub fn sw_free_energy_full_grid(integrand: &SpinWaveIntegrand, n: usize) -> f64 {
    0.5 * grid_mean(integrand.family.dim(), n, |k| integrand.value(k).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaMinimum {
    pub theta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaScan {
    pub family: SpinWaveFamily,
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub minima: Vec<ThetaMinimum>,
    /// Lowest scanned local maximum minus the lowest minimum.
    pub gap: f64,
    /// The profile is flat within tolerance; no minima are reported.
    pub degenerate: bool,
}

/// Profiles flatter than this are reported as degenerate.
pub const FLAT_TOLERANCE: f64 = 1e-10;

/// Scans `F` on `resolution` equally spaced angles in `[0, 2π)` and refines
/// each periodic local minimum by golden-section search to `1e-7` rad.
pub fn minimize_over_theta(family: SpinWaveFamily, resolution: usize, quad: &QuadratureSpec) -> Result<ThetaScan> {
    family.validate()?;
    ensure!(
        resolution >= 360,
        "need at least 360 angles per period, got {resolution}"
    );
    let step = 2.0 * PI / resolution as f64;
    let thetas: Vec<f64> = (0..resolution).map(|i| i as f64 * step).collect();
    let mut values = Vec::with_capacity(resolution);
    let mut errors = Vec::with_capacity(resolution);
    for &t in &thetas {
        let e = sw_free_energy(&SpinWaveIntegrand::new(family, t)?, quad)?;
        values.push(e.estimate);
        errors.push(e.error);
    }
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let low = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if top - low < FLAT_TOLERANCE {
        return Ok(ThetaScan {
            family,
            thetas,
            values,
            errors,
            minima: Vec::new(),
            gap: 0.0,
            degenerate: true,
        });
    }
    let n = resolution;
    let at = |i: isize| values[i.rem_euclid(n as isize) as usize];
    let eval = |t: f64| -> Result<f64> { Ok(sw_free_energy(&SpinWaveIntegrand::new(family, t)?, quad)?.estimate) };
    let mut minima = Vec::new();
    let mut max_values = Vec::new();
    for i in 0..n as isize {
        let (a, b, c) = (at(i - 1), at(i), at(i + 1));
        if b < a && b <= c {
            let (t, v) = golden_section(&eval, thetas[i as usize] - step, thetas[i as usize] + step, 1e-7)?;
            // keep the refined point only if it improves on the grid value
            let (t, v) = if v <= b { (t, v) } else { (thetas[i as usize], b) };
            minima.push(ThetaMinimum {
                theta: t.rem_euclid(2.0 * PI),
                value: v,
            });
        } else if b > a && b >= c {
            max_values.push(b);
        }
    }
    let best = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    let gap = max_values.iter().cloned().fold(f64::INFINITY, f64::min) - best;
    Ok(ThetaScan {
        family,
        thetas,
        values,
        errors,
        minima,
        gap,
        degenerate: false,
    })
}

fn golden_section<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// Largest `|D_k(θ) - α D_k(0) - (1-α) D_k(π)|`, `α = (1 + cos θ)/2`, over all
/// pairs of the given wave vectors and angles.
pub fn afm_linearity_check(gamma: f64, ks: &[[f64; 2]], thetas: &[f64]) -> Result<f64> {
    let family = SpinWaveFamily::Afm { gamma };
    family.validate()?;
    let d0 = SpinWaveIntegrand::new(family, 0.0)?;
    let dpi = SpinWaveIntegrand::new(family, PI)?;
    let mut worst: f64 = 0.0;
    for &t in thetas {
        let dt = SpinWaveIntegrand::new(family, t)?;
        let alpha = 0.5 * (1.0 + t.cos());
        for k in ks {
            let r = dt.value(k) - alpha * d0.value(k) - (1.0 - alpha) * dpi.value(k);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219;

/// `½(∫ log D̂₂ dk/(2π)² - log 2) = ½(4G/π - log 2)`, the compass value at
/// `θ = π/4`.
pub fn compass_quarter_pi_exact() -> f64 {
    0.5 * (4.0 * CATALAN / PI - 2f64.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(family: SpinWaveFamily, t: f64) -> LadderEstimate {
        sw_free_energy(
            &SpinWaveIntegrand::new(family, t).unwrap(),
            &family.default_quadrature(),
        )
        .unwrap()
    }

    #[test]
    fn inner_integral_matches_quadrature() {
        for (a, b) in [(3.0, 1.0), (2.0, -1.5), (1.0, 0.99)] {
            let n = 1 << 16;
            let q: f64 = crate::quadrature::midpoint_nodes(n)
                .iter()
                .map(|k| (a - b * k.cos()).ln())
                .sum::<f64>()
                / n as f64;
            assert!((log_cosine_integral(a, b) - q).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn compass_anchor_values() {
        assert!(f(SpinWaveFamily::Compass, 0.0).estimate.abs() < 1e-12);
        // independent oracle: 2-D midpoint sum of log D̂₂ on a fine grid
        let n = 2048;
        let lap = 0.5 * crate::quadrature::grid_mean(2, n, |k| (modulus(k[0]) + modulus(k[1])).ln());
        let oracle = lap - 0.5 * 2f64.ln();
        let val = f(SpinWaveFamily::Compass, PI / 4.0).estimate;
        assert!((val - oracle).abs() < 1e-3, "{val} vs {oracle}");
        assert!((val - 0.2365).abs() < 1e-3);
        assert!((val - compass_quarter_pi_exact()).abs() < 1e-6);
    }

    #[test]
    fn exact_axis_agrees_with_full_grid() {
        for fam in [SpinWaveFamily::Compass, SpinWaveFamily::Afm { gamma: 1.2 }] {
            for t in [0.3, 1.1] {
                let a = f(fam, t).estimate;
                let b = sw_free_energy_full_grid(&SpinWaveIntegrand::new(fam, t).unwrap(), 2048);
                assert!((a - b).abs() < 1e-4, "{fam:?} {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn symmetries() {
        let c = SpinWaveFamily::Compass;
        for t in [0.2, 0.7] {
            assert!((f(c, t).estimate - f(c, PI / 2.0 - t).estimate).abs() < 1e-8);
        }
        let o = SpinWaveFamily::OneTwenty;
        let t = 0.4;
        let base = f(o, t).estimate;
        assert!((base - f(o, -t).estimate).abs() < 1e-8);
        assert!((base - f(o, t + 2.0 * PI / 3.0).estimate).abs() < 1e-8);
        let a = SpinWaveFamily::Afm { gamma: 1.0 };
        assert!((f(a, t).estimate - f(a, 2.0 * PI - t).estimate).abs() < 1e-10);
        let flat = SpinWaveFamily::Afm { gamma: 0.0 };
        assert_eq!(f(flat, 0.1).estimate, f(flat, 2.0).estimate);
    }

    #[test]
    fn ladder_increments_shrink() {
        let integrand = SpinWaveIntegrand::new(SpinWaveFamily::OneTwenty, 0.25).unwrap();
        let quad = QuadratureSpec::for_dim(2).with_points(64);
        let e = sw_free_energy(&integrand, &quad).unwrap();
        let d1 = (e.values[1] - e.values[0]).abs();
        let d2 = (e.values[2] - e.values[1]).abs();
        assert!(d2 < d1);
    }

    #[test]
    fn compass_minima() {
        let fam = SpinWaveFamily::Compass;
        let scan = minimize_over_theta(fam, 360, &fam.default_quadrature()).unwrap();
        let got: Vec<f64> = scan.minima.iter().map(|m| m.theta).collect();
        assert_eq!(got.len(), 4, "{got:?}");
        for (g, e) in got.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI]) {
            assert!((g - e).abs() < 1e-3);
        }
        assert!(scan.gap > 0.2);
    }

    #[test]
    fn one_twenty_minima() {
        let fam = SpinWaveFamily::OneTwenty;
        let scan = minimize_over_theta(fam, 360, &fam.default_quadrature()).unwrap();
        let got: Vec<f64> = scan.minima.iter().map(|m| m.theta).collect();
        assert_eq!(got.len(), 6, "{got:?}");
        for (j, g) in got.iter().enumerate() {
            assert!((g - j as f64 * PI / 3.0).abs() < 1e-3, "{got:?}");
        }
        assert!(scan.gap > 0.0);
    }

    #[test]
    fn afm_minima_and_margin() {
        for gamma in [0.5, 1.0, 1.5] {
            let fam = SpinWaveFamily::Afm { gamma };
            let scan = minimize_over_theta(fam, 360, &fam.default_quadrature()).unwrap();
            let got: Vec<f64> = scan.minima.iter().map(|m| m.theta).collect();
            assert_eq!(got.len(), 2, "{got:?}");
            assert!(got[0].abs() < 1e-3 && (got[1] - PI).abs() < 1e-3);
            assert!(f(fam, PI / 2.0).estimate - f(fam, 0.0).estimate > 0.0);
        }
        let flat = SpinWaveFamily::Afm { gamma: 0.0 };
        assert!(
            minimize_over_theta(flat, 360, &flat.default_quadrature())
                .unwrap()
                .degenerate
        );
        assert!(minimize_over_theta(flat, 100, &flat.default_quadrature()).is_err());
    }

    #[test]
    fn afm_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ks: Vec<[f64; 2]> = (0..1000)
            .map(|_| [rng.random_range(-PI..PI), rng.random_range(-PI..PI)])
            .collect();
        let thetas: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        assert!(afm_linearity_check(1.3, &ks, &thetas).unwrap() < 1e-12);
        assert_eq!(afm_linearity_check(1.3, &ks, &[0.0, PI]).unwrap(), 0.0);
        assert!(afm_linearity_check(2.5, &ks, &thetas).is_err());
    }
}
