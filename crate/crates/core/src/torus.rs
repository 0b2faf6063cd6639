//! Periodic lattice geometry: the torus `(Z/LZ)^d`, its reciprocal grid and
//! row-major site linearization.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A `d`-dimensional torus of even side `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusSpec {
    dim: usize,
    side: usize,
}

/// A site of the torus with coordinates already reduced into `[0, L)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site(pub Vec<usize>);

/// A reciprocal vector `2π n / L` with every component in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalVector {
    pub modes: Vec<usize>,
    pub k: Vec<f64>,
}

impl TorusSpec {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        ensure!(dim >= 1, "torus dimension must be positive, got {dim}");
        ensure!(
            side >= 2 && side.is_multiple_of(2),
            "torus side must be even and at least 2, got {side}"
        );
        ensure!(
            (side as f64).powi(dim as i32) < 1e9,
            "torus with L^d = {side}^{dim} sites is too large"
        );
        Ok(TorusSpec { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of sites `L^d`.
    pub fn volume(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn wrap(&self, coords: &[i64]) -> Site {
        debug_assert_eq!(coords.len(), self.dim);
        let l = self.side as i64;
        Site(coords.iter().map(|&c| c.rem_euclid(l) as usize).collect())
    }

    /// Componentwise `(y - x) mod L`.
    pub fn displacement(&self, x: &Site, y: &Site) -> Vec<usize> {
        x.0.iter()
            .zip(&y.0)
            .map(|(&a, &b)| (b + self.side - a) % self.side)
            .collect()
    }

    /// Row-major index: the last coordinate varies fastest.
    pub fn index(&self, site: &Site) -> usize {
        site.0.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    pub fn index_of_coords(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.side + c)
    }

    pub fn site(&self, mut index: usize) -> Site {
        let mut coords = vec![0; self.dim];
        for c in coords.iter_mut().rev() {
            *c = index % self.side;
            index /= self.side;
        }
        Site(coords)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.volume()).map(move |i| self.site(i))
    }

    /// Index of `site + offset`, wrapping around.
    pub fn shift(&self, index: usize, offset: &[i64]) -> usize {
        let site = self.site(index);
        let l = self.side as i64;
        let coords: Vec<usize> = site
            .0
            .iter()
            .zip(offset)
            .map(|(&c, &o)| (c as i64 + o).rem_euclid(l) as usize)
            .collect();
        self.index_of_coords(&coords)
    }

    /// Table `t[v * N + x]` = index of `x + v`, for all displacement and site
    /// indices.
    pub fn translation_table(&self) -> Vec<usize> {
        let n = self.volume();
        let sites: Vec<Site> = self.sites().collect();
        let mut table = Vec::with_capacity(n * n);
        let mut coords = vec![0usize; self.dim];
        for v in &sites {
            for x in &sites {
                for ((c, a), b) in coords.iter_mut().zip(&v.0).zip(&x.0) {
                    *c = (a + b) % self.side;
                }
                table.push(self.index_of_coords(&coords));
            }
        }
        table
    }

    /// Index of the displacement `y - x`.
    pub fn displacement_index(&self, x: usize, y: usize) -> usize {
        let (sx, sy) = (self.site(x), self.site(y));
        self.index_of_coords(&self.displacement(&sx, &sy))
    }

    /// Reciprocal vectors in the same row-major order as the sites; the zero
    /// mode comes first.
    pub fn reciprocal_grid(&self) -> Vec<ReciprocalVector> {
        let step = 2.0 * PI / self.side as f64;
        self.sites()
            .map(|s| ReciprocalVector {
                k: s.0.iter().map(|&n| n as f64 * step).collect(),
                modes: s.0,
            })
            .collect()
    }
}

impl ReciprocalVector {
    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|&n| n == 0)
    }

    /// The same vector with components mapped into `(-π, π]`.
    pub fn centered(&self) -> Vec<f64> {
        self.k.iter().map(|&k| centered_angle(k)).collect()
    }

    pub fn dot(&self, x: &Site) -> f64 {
        self.k.iter().zip(&x.0).map(|(k, &c)| k * c as f64).sum()
    }
}

/// Maps an angle in `[0, 2π)` to `(-π, π]`.
pub fn centered_angle(k: f64) -> f64 {
    if k > PI {
        k - 2.0 * PI
    } else {
        k
    }
}
