//! Spin spaces, a priori measures and torus Hamiltonians.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::kernels::CouplingMatrix;
use crate::torus::TorusSpec;

/// Model families. Potts labels are stored 0-based (`0..q`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelFamily {
    Ising,
    Potts {
        q: usize,
    },
    On {
        n: usize,
    },
    LiquidCrystal {
        n: usize,
    },
    /// Gaussian free field with mass `kappa` (a priori law `e^{-κφ²/2} dφ`).
    Gff {
        kappa: f64,
    },
    /// Heights with a priori law `e^{-V(φ)} dφ`, `V` the double-well potential.
    GaussianDoubleWell {
        kappa: f64,
    },
    GradientTwoKappa {
        kappa_o: f64,
        kappa_d: f64,
        p: f64,
    },
    /// Compass model on `Z^d` with spins in `S^{d-1}`.
    OrbitalCompass {
        d: usize,
    },
    /// 120-degree model: `d = 3`, spins in `S^1`.
    OneTwenty,
    /// Nearest plus next-nearest neighbour antiferromagnet: `d = 2`, spins in `S^1`.
    NnnAntiferromagnet {
        gamma: f64,
    },
}

/// The spin space a family lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinSpace {
    Signs,
    Labels(usize),
    Sphere(usize),
    Heights,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    family: ModelFamily,
    #[serde(skip)]
    simplex: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            family: ModelFamily,
        }
        let raw = Raw::deserialize(de)?;
        ModelSpec::new(raw.family).map_err(serde::de::Error::custom)
    }
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Result<Self> {
        use ModelFamily::*;
        match &family {
            Ising | OneTwenty => {}
            Potts { q } => ensure!(*q >= 2, "Potts model needs q >= 2, got {q}"),
            On { n } => ensure!(*n >= 1, "O(n) model needs n >= 1"),
            LiquidCrystal { n } => ensure!(*n >= 2, "liquid-crystal model needs n >= 2"),
            Gff { kappa } => ensure!(kappa.is_finite() && *kappa >= 0.0, "GFF mass must be >= 0"),
            GaussianDoubleWell { kappa } => {
                ensure!(kappa.is_finite() && *kappa > 0.0, "double-well kappa must be > 0")
            }
            GradientTwoKappa { kappa_o, kappa_d, p } => {
                ensure!(
                    kappa_o.is_finite() && kappa_d.is_finite() && *kappa_o > 0.0 && *kappa_d > 0.0,
                    "gradient model needs kappa_O, kappa_D > 0"
                );
                ensure!((0.0..=1.0).contains(p), "gradient model needs p in [0, 1]");
            }
            OrbitalCompass { d } => ensure!(*d == 2 || *d == 3, "compass model needs d in {{2, 3}}"),
            NnnAntiferromagnet { gamma } => {
                ensure!(
                    gamma.is_finite() && gamma.abs() < 2.0,
                    "antiferromagnet needs |gamma| < 2"
                )
            }
        }
        let simplex = match family {
            Potts { q } => tetrahedral_vectors(q)?,
            _ => Vec::new(),
        };
        Ok(ModelSpec { family, simplex })
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    /// Dimension of the spin vectors.
    pub fn nu(&self) -> usize {
        use ModelFamily::*;
        match self.family {
            Ising => 1,
            Potts { q } => q - 1,
            On { n } => n,
            // traceless symmetric n x n matrices
            LiquidCrystal { n } => n * (n + 1) / 2 - 1,
            Gff { .. } | GaussianDoubleWell { .. } | GradientTwoKappa { .. } => 1,
            OrbitalCompass { d } => d,
            OneTwenty | NnnAntiferromagnet { .. } => 2,
        }
    }

    /// Length of the vector returned by [`SpinConfiguration::spin_vector`].
    /// Equal to `nu` except for liquid crystals, whose Q-matrix is stored as
    /// all `n²` entries (the Frobenius product is the relevant dot product).
    pub fn embedding_dim(&self) -> usize {
        match self.family {
            ModelFamily::LiquidCrystal { n } => n * n,
            _ => self.nu(),
        }
    }

    pub fn spin_space(&self) -> SpinSpace {
        use ModelFamily::*;
        match self.family {
            Ising => SpinSpace::Signs,
            Potts { q } => SpinSpace::Labels(q),
            On { n } | LiquidCrystal { n } => SpinSpace::Sphere(n),
            OrbitalCompass { d } => SpinSpace::Sphere(d),
            OneTwenty | NnnAntiferromagnet { .. } => SpinSpace::Sphere(2),
            Gff { .. } | GaussianDoubleWell { .. } | GradientTwoKappa { .. } => SpinSpace::Heights,
        }
    }

    /// True when every spin vector has norm one.
    pub fn is_unit_spin(&self) -> bool {
        !matches!(self.spin_space(), SpinSpace::Heights) && !matches!(self.family, ModelFamily::LiquidCrystal { .. })
    }

    /// Families whose energy is a two-body coupling `J_{xy}` of spin vectors.
    pub fn is_pair_model(&self) -> bool {
        use ModelFamily::*;
        matches!(
            self.family,
            Ising | Potts { .. } | On { .. } | LiquidCrystal { .. } | Gff { .. } | GaussianDoubleWell { .. }
        )
    }

    /// Lattice dimension imposed by the family, if any.
    pub fn required_dim(&self) -> Option<usize> {
        match self.family {
            ModelFamily::OrbitalCompass { d } => Some(d),
            ModelFamily::OneTwenty => Some(3),
            ModelFamily::NnnAntiferromagnet { .. } => Some(2),
            _ => None,
        }
    }

    /// Tetrahedral vectors of a Potts model.
    pub fn potts_vectors(&self) -> &[Vec<f64>] {
        &self.simplex
    }

    pub fn check_torus(&self, torus: &TorusSpec) -> Result<()> {
        if let Some(d) = self.required_dim() {
            ensure!(
                torus.dim() == d,
                "{:?} lives on a {d}-dimensional lattice, torus has d = {}",
                self.family,
                torus.dim()
            );
        }
        Ok(())
    }
}

/// Per-site spin values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinValues {
    Signs(Vec<i8>),
    Labels(Vec<usize>),
    /// Unit vectors stored contiguously, `n` components per site.
    Vectors {
        n: usize,
        data: Vec<f64>,
    },
    Heights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    torus: TorusSpec,
    values: SpinValues,
}

impl SpinConfiguration {
    /// Checks the values against the model's spin space.
    pub fn new(model: &ModelSpec, torus: TorusSpec, values: SpinValues) -> Result<Self> {
        model.check_torus(&torus)?;
        let n_sites = torus.volume();
        match (model.spin_space(), &values) {
            (SpinSpace::Signs, SpinValues::Signs(s)) => {
                ensure!(s.len() == n_sites, "expected {n_sites} signs");
                ensure!(s.iter().all(|&v| v == 1 || v == -1), "Ising spins must be +1 or -1");
            }
            (SpinSpace::Labels(q), SpinValues::Labels(l)) => {
                ensure!(l.len() == n_sites, "expected {n_sites} labels");
                ensure!(l.iter().all(|&v| v < q), "Potts labels must lie in 0..{q}");
            }
            (SpinSpace::Sphere(n), SpinValues::Vectors { n: m, data }) => {
                ensure!(*m == n, "expected {n}-component spins, got {m}");
                ensure!(data.len() == n * n_sites, "expected {} vector components", n * n_sites);
                for s in data.chunks(n) {
                    let norm2: f64 = s.iter().map(|c| c * c).sum();
                    ensure!((norm2.sqrt() - 1.0).abs() <= 1e-12, "spin {s:?} is not a unit vector");
                }
            }
            (SpinSpace::Heights, SpinValues::Heights(h)) => {
                ensure!(h.len() == n_sites, "expected {n_sites} heights");
                ensure!(h.iter().all(|v| v.is_finite()), "heights must be finite");
            }
            _ => return Err(Error::validation("spin values do not match the model's spin space")),
        }
        Ok(SpinConfiguration { torus, values })
    }

    /// Every site in the same state: `+1`, label `0`, `ê₁`, or height `0`.
    pub fn uniform(model: &ModelSpec, torus: TorusSpec) -> Result<Self> {
        let n = torus.volume();
        let values = match model.spin_space() {
            SpinSpace::Signs => SpinValues::Signs(vec![1; n]),
            SpinSpace::Labels(_) => SpinValues::Labels(vec![0; n]),
            SpinSpace::Sphere(m) => {
                let mut data = vec![0.0; n * m];
                for s in data.chunks_mut(m) {
                    s[0] = 1.0;
                }
                SpinValues::Vectors { n: m, data }
            }
            SpinSpace::Heights => SpinValues::Heights(vec![0.0; n]),
        };
        Self::new(model, torus, values)
    }

    pub(crate) fn from_parts_unchecked(torus: TorusSpec, values: SpinValues) -> Self {
        SpinConfiguration { torus, values }
    }

    pub fn torus(&self) -> TorusSpec {
        self.torus
    }

    pub fn values(&self) -> &SpinValues {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut SpinValues {
        &mut self.values
    }

    /// Writes the spin vector of site `x` into `out` (length
    /// `model.embedding_dim()`).
    pub fn spin_vector(&self, model: &ModelSpec, x: usize, out: &mut [f64]) {
        match &self.values {
            SpinValues::Signs(s) => out[0] = s[x] as f64,
            SpinValues::Labels(l) => out.copy_from_slice(&model.simplex[l[x]]),
            SpinValues::Vectors { n, data } => {
                let s = &data[x * n..(x + 1) * n];
                if let ModelFamily::LiquidCrystal { .. } = model.family {
                    out.copy_from_slice(&qmatrix(s));
                } else {
                    out.copy_from_slice(s);
                }
            }
            SpinValues::Heights(h) => out[0] = h[x],
        }
    }

    /// All spin vectors, site-major.
    pub fn spin_vectors(&self, model: &ModelSpec) -> Vec<f64> {
        let m = model.embedding_dim();
        let mut out = vec![0.0; m * self.torus.volume()];
        for (x, chunk) in out.chunks_mut(m).enumerate() {
            self.spin_vector(model, x, chunk);
        }
        out
    }

    /// Raw unit vector at `x` for sphere-valued spins.
    pub fn vector(&self, x: usize) -> Option<&[f64]> {
        match &self.values {
            SpinValues::Vectors { n, data } => Some(&data[x * n..(x + 1) * n]),
            _ => None,
        }
    }
}

/// `q` unit vectors in `R^{q-1}` with pairwise dot product `-1/(q-1)`.
///
/// Built inductively: given the `q`-simplex `w_α`, the `(q+1)`-simplex is
/// `ê₁` together with `(-1/q, √(1 - 1/q²) w_α)`.
pub fn tetrahedral_vectors(q: usize) -> Result<Vec<Vec<f64>>> {
    ensure!(q >= 2, "tetrahedral representation needs q >= 2, got {q}");
    let mut verts = vec![vec![1.0], vec![-1.0]];
    for m in 2..q {
        let mf = m as f64;
        let scale = (1.0 - 1.0 / (mf * mf)).sqrt();
        let mut next = Vec::with_capacity(m + 1);
        let mut first = vec![0.0; m];
        first[0] = 1.0;
        next.push(first);
        for w in &verts {
            let mut v = Vec::with_capacity(m);
            v.push(-1.0 / mf);
            v.extend(w.iter().map(|c| scale * c));
            next.push(v);
        }
        verts = next;
    }
    Ok(verts)
}

/// `q/(q-1) δ_{ab} - 1/(q-1)`, the dot product of the tetrahedral vectors of
/// labels `a` and `b` (0-based).
pub fn potts_dot(a: usize, b: usize, q: usize) -> Result<f64> {
    ensure!(q >= 2, "Potts model needs q >= 2");
    ensure!(a < q && b < q, "labels {a}, {b} out of range 0..{q}");
    let qf = q as f64;
    Ok(if a == b { 1.0 } else { -1.0 / (qf - 1.0) })
}

/// `Q_{αβ} = S_α S_β - δ_{αβ}/n`, row-major.
pub fn qmatrix(s: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut q = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            q[a * n + b] = s[a] * s[b] - if a == b { 1.0 / n as f64 } else { 0.0 };
        }
    }
    q
}

/// `Tr(Q Q̃)` from the explicit matrices.
pub fn qmatrix_trace(s: &[f64], t: &[f64]) -> Result<f64> {
    ensure!(
        s.len() == t.len() && !s.is_empty(),
        "spins must have equal, positive length"
    );
    for v in [s, t] {
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        ensure!(
            (norm - 1.0).abs() <= 1e-12,
            "Q-matrix needs unit spins, got norm {norm}"
        );
    }
    let n = s.len();
    let (q, qt) = (qmatrix(s), qmatrix(t));
    // Tr(Q Q̃) = Σ_{αβ} Q_{αβ} Q̃_{βα}
    let mut tr = 0.0;
    for a in 0..n {
        for b in 0..n {
            tr += q[a * n + b] * qt[b * n + a];
        }
    }
    Ok(tr)
}

/// Double-well potential `V(φ) = -log(e^{-κ(φ-1)²/2} + e^{-κ(φ+1)²/2})`.
pub fn double_well_potential(phi: f64, kappa: f64) -> f64 {
    // = κ(φ² + 1)/2 - log(2 cosh κφ), evaluated without overflow
    let a = (kappa * phi).abs();
    0.5 * kappa * (phi * phi + 1.0) - a - (-2.0 * a).exp().ln_1p()
}

/// Which of the two equivalent pair Hamiltonians to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyForm {
    /// `-½ Σ_{x,y} J_{xy} S_x·S_y` over ordered pairs.
    Dot,
    /// `¼ Σ_{x,y} J_{xy} |S_x - S_y|²` over ordered pairs, i.e. `½ Σ` over
    /// unordered pairs. Exceeds the dot form by `¼ Σ_{x,y} J_{xy}(|S_x|² + |S_y|²)`.
    Gradient,
}

/// Torus Hamiltonian `H_L(S)`.
///
/// Pair families use the periodized couplings in the requested form. For
/// heights only the coupling part is returned; the mass or double-well term
/// belongs to the a priori measure. The compass, 120-degree and
/// antiferromagnet models ignore `form` and `couplings` (beyond the torus
/// check) and use their explicit nearest-neighbour sums.
pub fn torus_hamiltonian(
    model: &ModelSpec,
    couplings: &CouplingMatrix,
    config: &SpinConfiguration,
    form: EnergyForm,
) -> Result<f64> {
    ensure!(
        couplings.torus() == config.torus(),
        "couplings and configuration live on different tori"
    );
    if !model.is_pair_model() {
        return match model.family {
            ModelFamily::GradientTwoKappa { .. } => Err(Error::NotApplicable(
                "the two-kappa gradient model has no single-configuration Hamiltonian here".into(),
            )),
            _ => specialized_hamiltonian(model, config),
        };
    }
    let torus = config.torus();
    let m = model.embedding_dim();
    let spins = config.spin_vectors(model);
    let mut total = 0.0;
    for x in 0..torus.volume() {
        let sx = &spins[x * m..(x + 1) * m];
        let mut acc = 0.0;
        for &(v, j) in couplings.nonzero() {
            let y = torus.shift(x, &offset_of(&torus, v));
            let sy = &spins[y * m..(y + 1) * m];
            acc += j * match form {
                EnergyForm::Dot => -0.5 * dot(sx, sy),
                EnergyForm::Gradient => 0.25 * sx.iter().zip(sy).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            };
        }
        total += acc;
    }
    Ok(total)
}

/// Explicit energies of the compass, 120-degree and antiferromagnet models.
pub fn specialized_hamiltonian(model: &ModelSpec, config: &SpinConfiguration) -> Result<f64> {
    let torus = config.torus();
    model.check_torus(&torus)?;
    let get = |x: usize| -> Result<&[f64]> {
        config
            .vector(x)
            .ok_or_else(|| Error::validation("specialized Hamiltonians need vector spins"))
    };
    let d = torus.dim();
    let mut unit = vec![0i64; d];
    let mut total = 0.0;
    match model.family {
        ModelFamily::OrbitalCompass { .. } => {
            ensure!(
                matches!(config.values(), SpinValues::Vectors { n, .. } if *n == d),
                "compass spins must lie in S^{}",
                d - 1
            );
            for x in 0..torus.volume() {
                let sx = get(x)?;
                for a in 0..d {
                    unit.fill(0);
                    unit[a] = 1;
                    let sy = get(torus.shift(x, &unit))?;
                    total += (sx[a] - sy[a]).powi(2);
                }
            }
        }
        ModelFamily::OneTwenty => {
            ensure!(
                matches!(config.values(), SpinValues::Vectors { n: 2, .. }),
                "120-degree spins must lie in S^1"
            );
            let b = one_twenty_axes();
            for x in 0..torus.volume() {
                let sx = get(x)?;
                for (a, ba) in b.iter().enumerate() {
                    unit.fill(0);
                    unit[a] = 1;
                    let sy = get(torus.shift(x, &unit))?;
                    total += (dot(sx, ba) - dot(sy, ba)).powi(2);
                }
            }
        }
        ModelFamily::NnnAntiferromagnet { gamma } => {
            ensure!(
                matches!(config.values(), SpinValues::Vectors { n: 2, .. }),
                "antiferromagnet spins must lie in S^1"
            );
            for x in 0..torus.volume() {
                let sx = get(x)?;
                let e1 = dot(sx, get(torus.shift(x, &[1, 0]))?);
                let e2 = dot(sx, get(torus.shift(x, &[0, 1]))?);
                let dp = dot(sx, get(torus.shift(x, &[1, 1]))?);
                let dm = dot(sx, get(torus.shift(x, &[1, -1]))?);
                total += gamma * (e1 + e2) + dp + dm;
            }
        }
        _ => return Err(Error::validation("not a specialized-Hamiltonian family")),
    }
    Ok(total)
}

/// Third roots of unity `b̂_α` at angles `0, 120°, -120°`.
pub fn one_twenty_axes() -> [[f64; 2]; 3] {
    let t = 2.0 * std::f64::consts::PI / 3.0;
    [[1.0, 0.0], [t.cos(), t.sin()], [t.cos(), -t.sin()]]
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn offset_of(torus: &TorusSpec, v: usize) -> Vec<i64> {
    torus.site(v).0.iter().map(|&c| c as i64).collect()
}
