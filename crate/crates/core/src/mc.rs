//! Seeded Markov-chain sampling of torus Gibbs measures and the estimators
//! constrained by the infrared bound.
//!
//! Chains target `e^{-βE(S)}` times the a priori measure, where `E` is
//! [`sampling_energy`]: `-Σ_{x,y} J_{xy} S_x·S_y` over ordered pairs for the
//! pair families (twice the dot-form Hamiltonian), `½ Σ_{x,y} J_{xy}(φ_x-φ_y)²`
//! for heights, and the explicit Hamiltonian for the compass, 120-degree and
//! antiferromagnet models. With this normalization the infrared bound reads
//! `ĉ(k) <= ν/(2β(1 - Ĵ(k)))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::error::{ensure, Error, Result};
use crate::kernels::{CouplingMatrix, TorusGreens};
use crate::models::{
    dot, double_well_potential, offset_of, one_twenty_axes, qmatrix, torus_hamiltonian, EnergyForm, ModelFamily,
    ModelSpec, SpinConfiguration, SpinSpace, SpinValues,
};
use crate::torus::TorusSpec;

/// Number of batches used for batch-means error bars.
pub const BATCHES: usize = 32;

const TARGET_ACCEPTANCE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    Metropolis,
    HeatBath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub beta: f64,
    /// Total sweeps per chain, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub update: UpdateRule,
    pub chains: usize,
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.beta.is_finite() && self.beta >= 0.0,
            "beta must be finite and >= 0"
        );
        ensure!(
            self.burn_in < self.sweeps,
            "burn-in ({}) must be below sweeps ({})",
            self.burn_in,
            self.sweeps
        );
        ensure!(self.thinning >= 1, "thinning must be >= 1");
        ensure!(self.chains >= 1, "need at least one chain");
        Ok(())
    }

    pub fn retained_per_chain(&self) -> usize {
        (self.sweeps - self.burn_in).div_ceil(self.thinning)
    }
}

/// Energy `E` with chains targeting `e^{-βE}` times the a priori measure.
pub fn sampling_energy(model: &ModelSpec, couplings: &CouplingMatrix, config: &SpinConfiguration) -> Result<f64> {
    let form = match model.spin_space() {
        SpinSpace::Heights => EnergyForm::Gradient,
        _ => EnergyForm::Dot,
    };
    let h = torus_hamiltonian(model, couplings, config, form)?;
    Ok(if model.is_pair_model() { 2.0 * h } else { h })
}

/// Samples retained from one chain, plus the final Metropolis statistics.
#[derive(Debug, Clone)]
pub struct ChainRun<T> {
    pub samples: Vec<T>,
    pub acceptance: f64,
    pub step: f64,
}

/// Runs `sampler.chains` independent chains and keeps every retained
/// configuration.
pub fn run_chain(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    sampler: &SamplerSpec,
) -> Result<Vec<ChainRun<SpinConfiguration>>> {
    run_chains_with(model, couplings, sampler, |c| c.clone())
}

/// Like [`run_chain`] but stores only `observe(config)` per retained sample.
/// Chains run in parallel; chain `i` uses the ChaCha8 stream `i` of the seed,
/// so results do not depend on the thread count.
pub fn run_chains_with<T, F>(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    sampler: &SamplerSpec,
    observe: F,
) -> Result<Vec<ChainRun<T>>>
where
    T: Send,
    F: Fn(&SpinConfiguration) -> T + Sync,
{
    sampler.validate()?;
    let torus = couplings.torus();
    model.check_torus(&torus)?;
    match model.family() {
        ModelFamily::GradientTwoKappa { .. } => {
            return Err(Error::NotApplicable(
                "the two-kappa gradient model is not sampled".into(),
            ))
        }
        ModelFamily::Gff { kappa } if *kappa == 0.0 => {
            return Err(Error::validation(
                "massless GFF is not normalizable on the torus; use kappa > 0",
            ))
        }
        _ => {}
    }
    if sampler.update == UpdateRule::HeatBath {
        ensure!(
            matches!(
                model.spin_space(),
                SpinSpace::Signs | SpinSpace::Labels(_) | SpinSpace::Heights
            ),
            "heat-bath updates exist for Ising, Potts and height models only"
        );
    }
    let neighbors = pair_neighbors(couplings);
    let local = specialized_offsets(model);
    (0..sampler.chains)
        .into_par_iter()
        .map(|i| {
            let mut chain = Chain::new(model, torus, &neighbors, &local, sampler, i as u64);
            let mut samples = Vec::with_capacity(sampler.retained_per_chain());
            for t in 0..sampler.sweeps {
                let adapt = t < sampler.burn_in;
                chain.sweep(adapt);
                if !adapt && (t - sampler.burn_in).is_multiple_of(sampler.thinning) {
                    samples.push(observe(&chain.config));
                }
            }
            Ok(ChainRun {
                samples,
                acceptance: chain.acceptance(),
                step: chain.step,
            })
        })
        .collect()
}

fn pair_neighbors(couplings: &CouplingMatrix) -> Vec<Vec<(usize, f64)>> {
    let torus = couplings.torus();
    let offsets: Vec<(Vec<i64>, f64)> = couplings
        .nonzero()
        .iter()
        .filter(|(v, _)| *v != 0)
        .map(|&(v, j)| (offset_of(&torus, v), j))
        .collect();
    (0..torus.volume())
        .map(|x| offsets.iter().map(|(off, j)| (torus.shift(x, off), *j)).collect())
        .collect()
}

/// Lattice offsets entering the local energy of the explicit-sum families.
fn specialized_offsets(model: &ModelSpec) -> Vec<Vec<i64>> {
    match model.family() {
        ModelFamily::OrbitalCompass { d } => (0..*d)
            .map(|a| {
                let mut e = vec![0; *d];
                e[a] = 1;
                e
            })
            .collect(),
        ModelFamily::OneTwenty => vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        ModelFamily::NnnAntiferromagnet { .. } => vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]],
        _ => Vec::new(),
    }
}

struct Chain<'a> {
    model: &'a ModelSpec,
    torus: TorusSpec,
    neighbors: &'a [Vec<(usize, f64)>],
    /// For explicit-sum families: per site, forward and backward neighbours
    /// for each offset.
    local: Vec<Vec<(usize, usize)>>,
    beta: f64,
    rule: UpdateRule,
    rng: ChaCha8Rng,
    config: SpinConfiguration,
    sigma: Vec<i8>,
    step: f64,
    accepted: u64,
    proposed: u64,
    scratch: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(
        model: &'a ModelSpec,
        torus: TorusSpec,
        neighbors: &'a [Vec<(usize, f64)>],
        offsets: &[Vec<i64>],
        sampler: &SamplerSpec,
        stream: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        rng.set_stream(stream);
        let n = torus.volume();
        let local = (0..n)
            .map(|x| {
                offsets
                    .iter()
                    .map(|off| {
                        let back: Vec<i64> = off.iter().map(|c| -c).collect();
                        (torus.shift(x, off), torus.shift(x, &back))
                    })
                    .collect()
            })
            .collect();
        let values = match model.spin_space() {
            SpinSpace::Signs => SpinValues::Signs(vec![1; n]),
            SpinSpace::Labels(_) => SpinValues::Labels(vec![0; n]),
            SpinSpace::Sphere(m) => SpinValues::Vectors {
                n: m,
                data: vec![0.0; n * m],
            },
            SpinSpace::Heights => SpinValues::Heights(vec![0.0; n]),
        };
        let mut chain = Chain {
            model,
            torus,
            neighbors,
            local,
            beta: sampler.beta,
            rule: sampler.update,
            rng,
            config: SpinConfiguration::from_parts_unchecked(torus, values),
            sigma: vec![1; n],
            step: 1.0,
            accepted: 0,
            proposed: 0,
            scratch: vec![0.0; model.embedding_dim()],
        };
        for x in 0..n {
            chain.draw_a_priori(x);
        }
        chain
    }

    fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn sweep(&mut self, adapt: bool) {
        let (a0, p0) = (self.accepted, self.proposed);
        let n = self.torus.volume();
        for i in 0..n {
            // Metropolis visits random sites: a fixed sweep order makes the
            // zero-field flips of discrete spins deterministic and periodic
            let x = match self.rule {
                UpdateRule::HeatBath => i,
                UpdateRule::Metropolis => self.rng.random_range(0..n),
            };
            if self.beta == 0.0 {
                // the conditional law is the a priori law
                self.draw_a_priori(x);
            } else {
                self.update(x);
            }
        }
        if adapt && self.proposed > p0 {
            let rate = (self.accepted - a0) as f64 / (self.proposed - p0) as f64;
            self.step = (self.step * (rate - TARGET_ACCEPTANCE).exp()).clamp(1e-4, 10.0);
        }
        if adapt {
            self.accepted = 0;
            self.proposed = 0;
        }
    }

    fn draw_a_priori(&mut self, x: usize) {
        let kappa = match self.model.family() {
            ModelFamily::Gff { kappa } | ModelFamily::GaussianDoubleWell { kappa } => *kappa,
            _ => 0.0,
        };
        let double_well = matches!(self.model.family(), ModelFamily::GaussianDoubleWell { .. });
        let rng = &mut self.rng;
        match self.config.values_mut() {
            SpinValues::Signs(s) => s[x] = if rng.random::<bool>() { 1 } else { -1 },
            SpinValues::Labels(l) => {
                let q = self.model.potts_vectors().len();
                l[x] = rng.random_range(0..q);
            }
            SpinValues::Vectors { n, data } => {
                let s = &mut data[x * *n..(x + 1) * *n];
                random_unit(rng, s);
            }
            SpinValues::Heights(h) => {
                let g: f64 = rng.sample(StandardNormal);
                if double_well {
                    let sigma = if rng.random::<bool>() { 1 } else { -1 };
                    self.sigma[x] = sigma;
                    h[x] = sigma as f64 + g / kappa.sqrt();
                } else {
                    h[x] = g / kappa.sqrt();
                }
            }
        }
    }

    fn update(&mut self, x: usize) {
        match self.model.spin_space() {
            SpinSpace::Signs => self.update_sign(x),
            SpinSpace::Labels(q) => self.update_label(x, q),
            SpinSpace::Sphere(n) => self.update_vector(x, n),
            SpinSpace::Heights => self.update_height(x),
        }
    }

    fn update_sign(&mut self, x: usize) {
        let SpinValues::Signs(s) = self.config.values_mut() else {
            unreachable!()
        };
        let h: f64 = self.neighbors[x].iter().map(|&(y, j)| j * s[y] as f64).sum();
        match self.rule {
            UpdateRule::HeatBath => {
                let p_plus = 1.0 / (1.0 + (-4.0 * self.beta * h).exp());
                s[x] = if self.rng.random::<f64>() < p_plus { 1 } else { -1 };
            }
            UpdateRule::Metropolis => {
                self.proposed += 1;
                let delta = -4.0 * self.beta * h * s[x] as f64;
                if delta >= 0.0 || self.rng.random::<f64>() < delta.exp() {
                    s[x] = -s[x];
                    self.accepted += 1;
                }
            }
        }
    }

    fn update_label(&mut self, x: usize, q: usize) {
        let verts = self.model.potts_vectors();
        let SpinValues::Labels(l) = self.config.values_mut() else {
            unreachable!()
        };
        let h = &mut self.scratch;
        h.fill(0.0);
        for &(y, j) in &self.neighbors[x] {
            for (hc, vc) in h.iter_mut().zip(&verts[l[y]]) {
                *hc += j * vc;
            }
        }
        let logw = |a: usize| 2.0 * self.beta * dot(&verts[a], h);
        match self.rule {
            UpdateRule::HeatBath => {
                let w: Vec<f64> = (0..q).map(logw).collect();
                let top = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let p: Vec<f64> = w.iter().map(|v| (v - top).exp()).collect();
                let mut u = self.rng.random::<f64>() * p.iter().sum::<f64>();
                let mut pick = q - 1;
                for (a, pa) in p.iter().enumerate() {
                    if u < *pa {
                        pick = a;
                        break;
                    }
                    u -= pa;
                }
                l[x] = pick;
            }
            UpdateRule::Metropolis => {
                self.proposed += 1;
                let mut cand = self.rng.random_range(0..q - 1);
                if cand >= l[x] {
                    cand += 1;
                }
                let delta = logw(cand) - logw(l[x]);
                if delta >= 0.0 || self.rng.random::<f64>() < delta.exp() {
                    l[x] = cand;
                    self.accepted += 1;
                }
            }
        }
    }

    fn update_vector(&mut self, x: usize, n: usize) {
        let mut cand = vec![0.0; n];
        let old: Vec<f64> = self.config.vector(x).expect("vector spins").to_vec();
        for (c, o) in cand.iter_mut().zip(&old) {
            let g: f64 = self.rng.sample(StandardNormal);
            *c = o + self.step * g;
        }
        let norm = dot(&cand, &cand).sqrt();
        if norm == 0.0 {
            return;
        }
        cand.iter_mut().for_each(|c| *c /= norm);
        self.proposed += 1;
        let delta = self.log_weight_vector(x, &cand) - self.log_weight_vector(x, &old);
        if delta >= 0.0 || self.rng.random::<f64>() < delta.exp() {
            let SpinValues::Vectors { data, .. } = self.config.values_mut() else {
                unreachable!()
            };
            data[x * n..(x + 1) * n].copy_from_slice(&cand);
            self.accepted += 1;
        }
    }

    /// Terms of `-βE` that depend on the spin `s` at `x`.
    fn log_weight_vector(&self, x: usize, s: &[f64]) -> f64 {
        let SpinValues::Vectors { n, data } = self.config.values() else {
            unreachable!()
        };
        let n = *n;
        let at = |y: usize| &data[y * n..(y + 1) * n];
        match self.model.family() {
            ModelFamily::OrbitalCompass { .. } => {
                let mut e = 0.0;
                for (a, &(fwd, back)) in self.local[x].iter().enumerate() {
                    e += (s[a] - at(fwd)[a]).powi(2) + (at(back)[a] - s[a]).powi(2);
                }
                -self.beta * e
            }
            ModelFamily::OneTwenty => {
                let b = one_twenty_axes();
                let mut e = 0.0;
                for (a, &(fwd, back)) in self.local[x].iter().enumerate() {
                    let p = dot(s, &b[a]);
                    e += (p - dot(at(fwd), &b[a])).powi(2) + (dot(at(back), &b[a]) - p).powi(2);
                }
                -self.beta * e
            }
            ModelFamily::NnnAntiferromagnet { gamma } => {
                let mut e = 0.0;
                for (a, &(fwd, back)) in self.local[x].iter().enumerate() {
                    let w = if a < 2 { *gamma } else { 1.0 };
                    e += w * (dot(s, at(fwd)) + dot(s, at(back)));
                }
                -self.beta * e
            }
            ModelFamily::LiquidCrystal { .. } => {
                let q = qmatrix(s);
                let mut acc = 0.0;
                for &(y, j) in &self.neighbors[x] {
                    acc += j * dot(&q, &qmatrix(at(y)));
                }
                2.0 * self.beta * acc
            }
            _ => {
                let mut acc = 0.0;
                for &(y, j) in &self.neighbors[x] {
                    acc += j * dot(s, at(y));
                }
                2.0 * self.beta * acc
            }
        }
    }

    fn update_height(&mut self, x: usize) {
        let (kappa, double_well) = match self.model.family() {
            ModelFamily::Gff { kappa } => (*kappa, false),
            ModelFamily::GaussianDoubleWell { kappa } => (*kappa, true),
            _ => unreachable!(),
        };
        let SpinValues::Heights(h) = self.config.values_mut() else {
            unreachable!()
        };
        let (mut jsum, mut field) = (0.0, 0.0);
        for &(y, j) in &self.neighbors[x] {
            jsum += j;
            field += j * h[y];
        }
        match self.rule {
            UpdateRule::HeatBath => {
                // exponent -β Σ_y J_xy (φ - φ_y)² - κ(φ - σ)²/2 (σ = 0 for the GFF)
                let sigma = if double_well { self.sigma[x] as f64 } else { 0.0 };
                let precision = 2.0 * self.beta * jsum + kappa;
                let mean = (2.0 * self.beta * field + kappa * sigma) / precision;
                let g: f64 = self.rng.sample(StandardNormal);
                h[x] = mean + g / precision.sqrt();
                if double_well {
                    let p_plus = 1.0 / (1.0 + (-2.0 * kappa * h[x]).exp());
                    self.sigma[x] = if self.rng.random::<f64>() < p_plus { 1 } else { -1 };
                }
            }
            UpdateRule::Metropolis => {
                let log_w = |phi: f64| {
                    let prior = if double_well {
                        -double_well_potential(phi, kappa)
                    } else {
                        -0.5 * kappa * phi * phi
                    };
                    // Σ_y J (φ - φ_y)² = jsum φ² - 2φ field + const
                    -self.beta * (jsum * phi * phi - 2.0 * phi * field) + prior
                };
                let g: f64 = self.rng.sample(StandardNormal);
                let cand = h[x] + self.step * g;
                self.proposed += 1;
                let delta = log_w(cand) - log_w(h[x]);
                if delta >= 0.0 || self.rng.random::<f64>() < delta.exp() {
                    h[x] = cand;
                    self.accepted += 1;
                }
            }
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = dot(out, out).sqrt();
        if norm > 1e-300 {
            out.iter_mut().for_each(|c| *c /= norm);
            return;
        }
    }
}

/// Batch-means estimate `(mean, standard error)` of a time series, with
/// `min(batches, len)` equal batches (a trailing remainder is dropped).
pub fn batch_means(series: &[f64], batches: usize) -> Result<(f64, f64)> {
    ensure!(series.len() >= 2, "need at least two samples for an error estimate");
    let b = batches.min(series.len()).max(2);
    let size = series.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| series[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Ok((mean, (var / b as f64).sqrt()))
}

/// Translation-averaged two-point function `c(v) = N^{-1} Σ_x S_x·S_{x+v}` of
/// one configuration, indexed by displacement.
pub fn two_point_sample(model: &ModelSpec, config: &SpinConfiguration) -> Vec<f64> {
    TwoPointObserver::new(model, config.torus()).observe(config)
}

/// [`two_point_sample`] with the translation table built once.
#[derive(Debug, Clone)]
pub struct TwoPointObserver<'a> {
    model: &'a ModelSpec,
    n: usize,
    table: Vec<usize>,
}

impl<'a> TwoPointObserver<'a> {
    pub fn new(model: &'a ModelSpec, torus: TorusSpec) -> Self {
        TwoPointObserver {
            model,
            n: torus.volume(),
            table: torus.translation_table(),
        }
    }

    pub fn observe(&self, config: &SpinConfiguration) -> Vec<f64> {
        let n = self.n;
        let m = self.model.embedding_dim();
        let s = config.spin_vectors(self.model);
        (0..n)
            .map(|v| {
                let row = &self.table[v * n..(v + 1) * n];
                let acc: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(x, &y)| dot(&s[x * m..(x + 1) * m], &s[y * m..(y + 1) * m]))
                    .sum();
                acc / n as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub torus: TorusSpec,
    pub samples: usize,
    /// `E(S_0·S_v)` per displacement index.
    pub c: Vec<f64>,
    pub c_se: Vec<f64>,
    /// Mode numbers of the reciprocal grid, zero mode first.
    pub modes: Vec<Vec<usize>>,
    /// `ĉ(k) = Σ_v c(v) e^{ik·v}` on the reciprocal grid.
    pub c_hat: Vec<f64>,
    pub c_hat_se: Vec<f64>,
}

/// Combines per-sample two-point functions (chains concatenated in chain
/// order) into means with batch-means errors.
pub fn estimate_two_point(torus: TorusSpec, per_sample: &[Vec<f64>]) -> Result<CorrelationEstimate> {
    ensure!(
        per_sample.len() >= 2,
        "need at least two retained samples, got {}",
        per_sample.len()
    );
    let n = torus.volume();
    ensure!(
        per_sample.iter().all(|c| c.len() == n),
        "two-point samples do not match the torus"
    );
    let grid = torus.reciprocal_grid();
    let l = torus.side();
    let cos_table: Vec<f64> = (0..l)
        .map(|p| (2.0 * std::f64::consts::PI * p as f64 / l as f64).cos())
        .collect();
    let sites: Vec<Vec<usize>> = (0..n).map(|v| torus.site(v).0).collect();
    let mut phases = Vec::with_capacity(n * n);
    for k in &grid {
        for v in &sites {
            phases.push(k.modes.iter().zip(v).map(|(a, b)| a * b).sum::<usize>() % l);
        }
    }
    let hat_series: Vec<Vec<f64>> = per_sample
        .par_iter()
        .map(|c| {
            phases
                .chunks(n)
                .map(|ph| c.iter().zip(ph).map(|(cv, &p)| cv * cos_table[p]).sum())
                .collect()
        })
        .collect();
    let column = |data: &[Vec<f64>], i: usize| -> Vec<f64> { data.iter().map(|row| row[i]).collect() };
    let mut c = Vec::with_capacity(n);
    let mut c_se = Vec::with_capacity(n);
    let mut c_hat = Vec::with_capacity(n);
    let mut c_hat_se = Vec::with_capacity(n);
    for i in 0..n {
        let (m, e) = batch_means(&column(per_sample, i), BATCHES)?;
        c.push(m);
        c_se.push(e);
        let (m, e) = batch_means(&column(&hat_series, i), BATCHES)?;
        c_hat.push(m);
        c_hat_se.push(e);
    }
    Ok(CorrelationEstimate {
        torus,
        samples: per_sample.len(),
        c,
        c_se,
        modes: grid.into_iter().map(|k| k.modes).collect(),
        c_hat,
        c_hat_se,
    })
}

/// Compares `ĉ(k)` with `ν/(2β) · 1/(1 - Ĵ^{(L)}(k))` at every `k ≠ 0`.
/// The zero mode is never compared. The margin is the worst
/// `(bound + 3 SE - ĉ)/SE`.
pub fn check_infrared_bound(
    estimate: &CorrelationEstimate,
    couplings: &CouplingMatrix,
    beta: f64,
    nu: usize,
) -> Result<Certificate> {
    ensure!(beta >= 0.0 && beta.is_finite(), "beta must be finite and >= 0");
    ensure!(
        couplings.torus() == estimate.torus,
        "estimate and couplings live on different tori"
    );
    let grid = estimate.torus.reciprocal_grid();
    let mut worst = f64::INFINITY;
    let mut worst_mode = Vec::new();
    let mut ok = true;
    let mut rows = Vec::new();
    for (i, k) in grid.iter().enumerate().skip(1) {
        let bound = if beta == 0.0 {
            f64::INFINITY
        } else {
            nu as f64 / (2.0 * beta) / couplings.one_minus_hat(k)
        };
        let se = estimate.c_hat_se[i].max(1e-300);
        let margin = (bound + 3.0 * se - estimate.c_hat[i]) / se;
        ok &= estimate.c_hat[i] <= bound + 3.0 * se;
        if margin < worst {
            worst = margin;
            worst_mode = k.modes.clone();
        }
        rows.push((k.modes.clone(), estimate.c_hat[i], estimate.c_hat_se[i], bound));
    }
    Ok(Certificate::new("infrared-bound")
        .param("beta", beta)
        .param("nu", nu as f64)
        .param("L", estimate.torus.side() as f64)
        .param("d", estimate.torus.dim() as f64)
        .quantity("samples", estimate.samples)
        .quantity("worst_mode", worst_mode)
        .quantity("modes", rows)
        .note("margin = min over k != 0 of (bound + 3 SE - c_hat)/SE")
        .verdict(ok, worst))
}

/// Spin-wave condensation statistic and its lower bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensationStat {
    /// Mean of `|L^{-d} Ŝ_0|²`.
    pub statistic: f64,
    pub statistic_se: f64,
    /// `1 - ν/(2β) G_L(0,0)`.
    pub lower_bound: f64,
    pub greens_diagonal: f64,
    /// Largest `|Σ_k |Ŝ_k|² - L^{2d}| / L^{2d}` over samples.
    pub parseval_max_residual: f64,
    pub samples: usize,
}

impl CondensationStat {
    pub fn respects_bound(&self) -> bool {
        self.statistic >= self.lower_bound - 3.0 * self.statistic_se
    }
}

/// `(|L^{-d} Ŝ_0|², relative Parseval residual)` of a unit-spin
/// configuration.
pub fn condensation_sample(model: &ModelSpec, config: &SpinConfiguration) -> Result<(f64, f64)> {
    ensure!(model.is_unit_spin(), "spin-wave condensation needs unit spins");
    let torus = config.torus();
    let n = torus.volume();
    let m = model.embedding_dim();
    let s = config.spin_vectors(model);
    let l = torus.side();
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = (0..l)
        .map(|p| {
            let a = 2.0 * std::f64::consts::PI * p as f64 / l as f64;
            (a.cos(), a.sin())
        })
        .unzip();
    let sites: Vec<Vec<usize>> = (0..n).map(|x| torus.site(x).0).collect();
    let mut total = 0.0;
    let mut zero = 0.0;
    for k in torus.reciprocal_grid() {
        let mut re = vec![0.0; m];
        let mut im = vec![0.0; m];
        for (x, site) in sites.iter().enumerate() {
            let p = k.modes.iter().zip(site).map(|(a, b)| a * b).sum::<usize>() % l;
            for c in 0..m {
                re[c] += s[x * m + c] * cos_t[p];
                im[c] += s[x * m + c] * sin_t[p];
            }
        }
        let power: f64 = re.iter().chain(&im).map(|v| v * v).sum();
        if k.is_zero() {
            zero = power;
        }
        total += power;
    }
    let nf = n as f64;
    Ok((zero / (nf * nf), (total - nf * nf).abs() / (nf * nf)))
}

/// Aggregates per-sample [`condensation_sample`] outputs.
pub fn spin_wave_condensation_stat(
    per_sample: &[(f64, f64)],
    couplings: &CouplingMatrix,
    beta: f64,
    nu: usize,
) -> Result<CondensationStat> {
    ensure!(beta > 0.0, "beta must be positive");
    let stat: Vec<f64> = per_sample.iter().map(|p| p.0).collect();
    let (mean, se) = batch_means(&stat, BATCHES)?;
    let g = TorusGreens::new(couplings)?.diagonal();
    Ok(CondensationStat {
        statistic: mean,
        statistic_se: se,
        lower_bound: 1.0 - nu as f64 / (2.0 * beta) * g,
        greens_diagonal: g,
        parseval_max_residual: per_sample.iter().map(|p| p.1).fold(0.0, f64::max),
        samples: per_sample.len(),
    })
}

/// `N^{-1} Σ_x |Σ_y J_{xy} S_y - m|²` with `m` the configuration's mean spin.
pub fn key_estimate_sample(model: &ModelSpec, couplings: &CouplingMatrix, config: &SpinConfiguration) -> f64 {
    let torus = config.torus();
    let n = torus.volume();
    let m = model.embedding_dim();
    let s = config.spin_vectors(model);
    let mut mean = vec![0.0; m];
    for x in 0..n {
        for c in 0..m {
            mean[c] += s[x * m + c] / n as f64;
        }
    }
    let offsets: Vec<(Vec<i64>, f64)> = couplings
        .nonzero()
        .iter()
        .map(|&(v, j)| (offset_of(&torus, v), j))
        .collect();
    let mut acc = 0.0;
    let mut field = vec![0.0; m];
    for x in 0..n {
        field.fill(0.0);
        for (off, j) in &offsets {
            let y = torus.shift(x, off);
            for c in 0..m {
                field[c] += j * s[y * m + c];
            }
        }
        acc += field.iter().zip(&mean).map(|(f, mm)| (f - mm).powi(2)).sum::<f64>();
    }
    acc / n as f64
}

/// Torus analogue of `I_d`: `L^{-d} Σ_{k≠0} Ĵ^{(L)}(k)² / (1 - Ĵ^{(L)}(k))`.
pub fn torus_mean_field_integral(couplings: &CouplingMatrix) -> Result<f64> {
    let greens = TorusGreens::new(couplings)?;
    let n = couplings.torus().volume() as f64;
    Ok(greens
        .spectrum()
        .iter()
        .map(|inv| {
            let jhat = 1.0 - 1.0 / inv;
            jhat * jhat * inv
        })
        .sum::<f64>()
        / n)
}

/// Checks `E|Σ_x J_{0,x} S_x - m⋆|² <= ν/(2β) I + 3 SE`. With
/// `infinite_volume = Some(I_d)` the bound uses `I_d`; otherwise it uses the
/// torus sum [`torus_mean_field_integral`], the form in which the inequality
/// follows directly from the infrared bound on the torus. Both sums are
/// always reported. An infinite `I_d` (recurrent kernel) is not applicable.
pub fn check_key_estimate(
    per_sample: &[f64],
    couplings: &CouplingMatrix,
    beta: f64,
    nu: usize,
    infinite_volume: Option<f64>,
) -> Result<Certificate> {
    ensure!(beta > 0.0 && beta.is_finite(), "beta must be positive");
    if let Some(i_d) = infinite_volume {
        if !i_d.is_finite() {
            return Err(Error::NotApplicable("I_d diverges for a recurrent kernel".into()));
        }
    }
    let (mean, se) = batch_means(per_sample, BATCHES)?;
    let torus_integral = torus_mean_field_integral(couplings)?;
    let scale = nu as f64 / (2.0 * beta);
    let integral = infinite_volume.unwrap_or(torus_integral);
    let bound = scale * integral;
    let ok = mean <= bound + 3.0 * se;
    let mut cert = Certificate::new("key-estimate")
        .param("beta", beta)
        .param("nu", nu as f64)
        .quantity("lhs", mean)
        .quantity("lhs_se", se)
        .quantity("torus_integral", torus_integral)
        .quantity("torus_bound", scale * torus_integral)
        .quantity("bound", bound)
        .quantity("samples", per_sample.len());
    if let Some(i_d) = infinite_volume {
        cert = cert.quantity("infinite_volume_integral", i_d);
    }
    Ok(cert.verdict(ok, (bound + 3.0 * se - mean) / se.max(1e-300)))
}
