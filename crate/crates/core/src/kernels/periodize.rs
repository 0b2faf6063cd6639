use std::f64::consts::PI;

use serde::Serialize;

use super::KernelSpec;
use crate::error::{ensure, Error, Result};
use crate::torus::{ReciprocalVector, TorusSpec};

/// Neglected tail mass accepted by [`periodize_to_tolerance`] by default.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Periodized couplings `J^{(L)}_{0,v} = Σ_z J_{0,v+Lz}` on a torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingMatrix {
    torus: TorusSpec,
    values: Vec<f64>,
    cutoff: usize,
    /// `1 - Σ_v J^{(L)}_{0,v}`: coupling mass left out by the truncation.
    tail_mass: f64,
    #[serde(skip)]
    nonzero: Vec<(usize, f64)>,
}

/// Periodizes `kernel` by summing every image `x` with
/// `|x|_∞ <= (cutoff + 1/2) L`. The box is symmetric, so the result is exactly
/// even under `v -> -v`.
pub fn periodize(kernel: &KernelSpec, torus: TorusSpec, cutoff: usize) -> Result<CouplingMatrix> {
    ensure!(cutoff >= 1, "periodization cutoff must be at least 1");
    ensure!(
        kernel.dim() == torus.dim(),
        "kernel dimension {} does not match torus dimension {}",
        kernel.dim(),
        torus.dim()
    );
    let d = torus.dim();
    let l = torus.side() as i64;
    let radius = cutoff as i64 * l + l / 2;
    let side = 2 * radius + 1;
    let count = (side as f64).powi(d as i32);
    ensure!(count <= 2e9, "periodization box with {count:e} points is too large");

    let mut values = vec![0.0; torus.volume()];
    match kernel.range() {
        Some(range) => {
            // finite range: enumerate the ℓ1 ball only
            let r = range as i64;
            let ball_side = 2 * r + 1;
            let mut x = vec![0i64; d];
            for idx in 0..ball_side.pow(d as u32) {
                let mut rem = idx;
                for c in x.iter_mut() {
                    *c = rem % ball_side - r;
                    rem /= ball_side;
                }
                let j = kernel.coupling(&x);
                if j != 0.0 && x.iter().all(|c| c.abs() <= radius) {
                    values[torus.index(&torus.wrap(&x))] += j;
                }
            }
        }
        None => {
            let mut coords = vec![0usize; d];
            let mut x = vec![0i64; d];
            for idx in 0..side.pow(d as u32) {
                let mut rem = idx;
                for (c, xc) in coords.iter_mut().zip(x.iter_mut()) {
                    *xc = rem % side - radius;
                    *c = xc.rem_euclid(l) as usize;
                    rem /= side;
                }
                let j = kernel.coupling(&x);
                if j != 0.0 {
                    values[torus.index_of_coords(&coords)] += j;
                }
            }
        }
    }
    // the two images of ±v are summed in different orders; average them so the
    // result is exactly even
    for i in 0..values.len() {
        let mirror = torus.displacement_index(i, 0);
        if mirror > i {
            let avg = 0.5 * (values[i] + values[mirror]);
            values[i] = avg;
            values[mirror] = avg;
        }
    }
    let tail_mass = (1.0 - values.iter().sum::<f64>()).max(0.0);
    Ok(CouplingMatrix::from_parts(torus, values, cutoff, tail_mass))
}

/// Periodizes with the smallest cutoff whose neglected mass is below `tol`.
pub fn periodize_to_tolerance(kernel: &KernelSpec, torus: TorusSpec, tol: f64) -> Result<CouplingMatrix> {
    const MAX_BOX: f64 = 5e7;
    let mut cutoff = 1;
    loop {
        let m = periodize(kernel, torus, cutoff)?;
        if m.tail_mass <= tol {
            return Ok(m);
        }
        let next = cutoff * 2;
        let side = (2 * next * torus.side() + torus.side() + 1) as f64;
        if kernel.range().is_some() || side.powi(torus.dim() as i32) > MAX_BOX {
            return Err(Error::Truncation {
                bound: m.tail_mass,
                tol,
            });
        }
        cutoff = next;
    }
}

impl CouplingMatrix {
    fn from_parts(torus: TorusSpec, values: Vec<f64>, cutoff: usize, tail_mass: f64) -> Self {
        let nonzero = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        CouplingMatrix {
            torus,
            values,
            cutoff,
            tail_mass,
            nonzero,
        }
    }

    /// Couplings given directly per displacement; used by tests and by the
    /// foreign-function interface.
    pub fn from_values(torus: TorusSpec, values: Vec<f64>) -> Result<Self> {
        ensure!(
            values.len() == torus.volume(),
            "expected {} coupling values",
            torus.volume()
        );
        ensure!(values[0] == 0.0, "self-coupling J_00 must vanish");
        for i in 0..values.len() {
            let mirror = torus.displacement_index(i, 0);
            ensure!(
                (values[i] - values[mirror]).abs() <= 1e-14,
                "couplings are not symmetric under v -> -v"
            );
        }
        let tail = 1.0 - values.iter().sum::<f64>();
        ensure!(tail.abs() < 1e-9, "couplings sum to {} instead of 1", 1.0 - tail);
        Ok(Self::from_parts(torus, values, 0, tail.max(0.0)))
    }

    pub fn torus(&self) -> TorusSpec {
        self.torus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Nonzero couplings as `(displacement index, value)`.
    pub fn nonzero(&self) -> &[(usize, f64)] {
        &self.nonzero
    }

    /// `J^{(L)}_{x,y}` for site indices.
    pub fn between(&self, x: usize, y: usize) -> f64 {
        self.values[self.torus.displacement_index(x, y)]
    }

    /// `Σ_y J^{(L)}_{x,y} S_y` for every `x`, i.e. the coupling matrix applied to
    /// a scalar field.
    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        let n = self.torus.volume();
        let offsets = self.offsets();
        (0..n)
            .map(|x| offsets.iter().map(|(off, j)| j * field[self.torus.shift(x, off)]).sum())
            .collect()
    }

    /// Nonzero couplings as signed offsets.
    pub fn offsets(&self) -> Vec<(Vec<i64>, f64)> {
        self.nonzero
            .iter()
            .map(|&(i, j)| {
                let s = self.torus.site(i);
                (s.0.iter().map(|&c| c as i64).collect(), j)
            })
            .collect()
    }

    /// `1 - Ĵ^{(L)}(k)` for a reciprocal vector of this torus.
    pub fn one_minus_hat(&self, k: &ReciprocalVector) -> f64 {
        let l = self.torus.side();
        let step = 2.0 * PI / l as f64;
        let mut acc = self.tail_mass;
        for &(i, j) in &self.nonzero {
            let v = self.torus.site(i);
            let phase: usize = v.0.iter().zip(&k.modes).map(|(a, b)| a * b).sum::<usize>() % l;
            acc += 2.0 * j * (0.5 * phase as f64 * step).sin().powi(2);
        }
        acc
    }

    pub fn fourier_transform(&self, k: &ReciprocalVector) -> f64 {
        1.0 - self.one_minus_hat(k)
    }

    /// `1 - Ĵ^{(L)}` on the whole reciprocal grid, zero mode first.
    pub fn one_minus_hat_grid(&self) -> Vec<f64> {
        self.torus
            .reciprocal_grid()
            .iter()
            .map(|k| self.one_minus_hat(k))
            .collect()
    }
}
