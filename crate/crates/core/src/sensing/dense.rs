//! Row-sampled and dense random measurement ensembles.

use crate::error::{Error, Result};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Orthogonal family the subsampled ensemble draws its rows from. Both
/// satisfy U^H U = (L/M) I after the sqrt(L/M) row scaling applied here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrthogonalFamily {
    Identity,
    Fourier,
}

/// Rows drawn i.i.d. uniformly (with replacement) from the rows of
/// sqrt(L/M) U, U an orthogonal basis. M > L is allowed.
#[derive(Debug, Clone)]
pub struct SubsampledOrthogonal {
    pub family: OrthogonalFamily,
    pub ambient: usize,
    pub indices: Vec<usize>,
    pub seed: u64,
}

impl SubsampledOrthogonal {
    pub fn draw(family: OrthogonalFamily, ambient: usize, m: usize, seed: u64) -> Self {
        let mut r = rng::substream(seed, rng::Domain::Operator, 0);
        let indices = (0..m).map(|_| r.gen_range(0..ambient)).collect();
        Self {
            family,
            ambient,
            indices,
            seed,
        }
    }

    /// Deterministic full sampling: every row exactly once (M = L). With
    /// the identity family this makes A^H A = I exactly.
    pub fn full(family: OrthogonalFamily, ambient: usize) -> Self {
        Self {
            family,
            ambient,
            indices: (0..ambient).collect(),
            seed: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    fn scale(&self) -> f64 {
        (self.ambient as f64 / self.rows() as f64).sqrt()
    }

    /// Unit-norm row `idx` of the orthogonal family U (before scaling).
    fn family_row(&self, idx: usize, out: &mut [Complex64]) {
        match self.family {
            OrthogonalFamily::Identity => {
                out.fill(Complex64::default());
                out[idx] = Complex64::new(1.0, 0.0);
            }
            OrthogonalFamily::Fourier => {
                let l = self.ambient as f64;
                let norm = 1.0 / l.sqrt();
                for (j, o) in out.iter_mut().enumerate() {
                    let ang = -TAU * idx as f64 * j as f64 / l;
                    *o = Complex64::new(ang.cos(), ang.sin()) * norm;
                }
            }
        }
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        let s = self.scale();
        match self.family {
            OrthogonalFamily::Identity => self.indices.iter().map(|&i| z[i] * s).collect(),
            OrthogonalFamily::Fourier => {
                let mut row = vec![Complex64::default(); self.ambient];
                self.indices
                    .iter()
                    .map(|&i| {
                        self.family_row(i, &mut row);
                        row.iter().zip(z).map(|(a, b)| a * b).sum::<Complex64>() * s
                    })
                    .collect()
            }
        }
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let s = self.scale();
        let mut out = vec![Complex64::default(); self.ambient];
        match self.family {
            OrthogonalFamily::Identity => {
                for (&i, &yi) in self.indices.iter().zip(y) {
                    out[i] += yi * s;
                }
            }
            OrthogonalFamily::Fourier => {
                let mut row = vec![Complex64::default(); self.ambient];
                for (&i, &yi) in self.indices.iter().zip(y) {
                    self.family_row(i, &mut row);
                    for (o, a) in out.iter_mut().zip(&row) {
                        *o += a.conj() * yi * s;
                    }
                }
            }
        }
        out
    }
}

/// Samples of the continuous trigonometric polynomial z(t) at locations
/// t_r drawn uniformly from [0, L). Row r applied to a coefficient vector
/// yields sqrt(L/M) z(t_r); rows are sqrt(L/M)-scaled Dirichlet kernels,
/// which keeps the ensemble exactly isotropic.
#[derive(Debug, Clone)]
pub struct TimeSamples {
    pub half: usize,
    pub sample_times: Vec<f64>,
    pub seed: u64,
}

impl TimeSamples {
    pub fn draw(half: usize, m: usize, seed: u64) -> Self {
        let l = (2 * half + 1) as f64;
        let mut r = rng::substream(seed, rng::Domain::Operator, 0);
        let sample_times = (0..m).map(|_| r.gen::<f64>() * l).collect();
        Self {
            half,
            sample_times,
            seed,
        }
    }

    pub fn ambient(&self) -> usize {
        2 * self.half + 1
    }

    pub fn rows(&self) -> usize {
        self.sample_times.len()
    }

    /// Real row entries a_r[l] = sqrt(L/M)/L * D((t_r - l)/L).
    fn row_weights(&self, t: f64) -> Vec<f64> {
        let l = self.ambient();
        let scale = (l as f64 / self.rows() as f64).sqrt() / l as f64;
        (0..l)
            .map(|j| {
                let ell = j as i64 - self.half as i64;
                dirichlet((t - ell as f64) / l as f64, l) * scale
            })
            .collect()
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.sample_times
            .iter()
            .map(|&t| {
                let w = self.row_weights(t);
                z.iter().zip(w).map(|(&zi, wi)| zi * wi).sum()
            })
            .collect()
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.ambient()];
        for (&t, &yi) in self.sample_times.iter().zip(y) {
            let w = self.row_weights(t);
            for (o, wi) in out.iter_mut().zip(w) {
                *o += yi * wi;
            }
        }
        out
    }
}

/// Periodic Dirichlet sum D(t) = sum_{k=-N}^{N} e^{i2pi kt}
/// = sin(L pi t)/sin(pi t), L = 2N+1 odd.
pub fn dirichlet(t: f64, l: usize) -> f64 {
    let tt = t - t.round();
    let s = (std::f64::consts::PI * tt).sin();
    if s.abs() < 1e-9 {
        // L'Hopital limit; exact value L at integers for odd L
        let c = (std::f64::consts::PI * tt).cos();
        l as f64 * (l as f64 * std::f64::consts::PI * tt).cos() / c
    } else {
        (l as f64 * std::f64::consts::PI * tt).sin() / s
    }
}

/// Dense real Gaussian projection with i.i.d. N(0, 1/M) entries.
#[derive(Debug, Clone)]
pub struct GaussianDense {
    pub rows: usize,
    pub ambient: usize,
    /// Row-major M x ambient real entries.
    pub entries: Vec<f64>,
    pub seed: u64,
}

impl GaussianDense {
    pub fn draw(ambient: usize, m: usize, seed: u64) -> Self {
        let mut r = rng::substream(seed, rng::Domain::Operator, 0);
        let std = 1.0 / (m as f64).sqrt();
        let entries = (0..m * ambient)
            .map(|_| rng::standard_normal(&mut r) * std)
            .collect();
        Self {
            rows: m,
            ambient,
            entries,
            seed,
        }
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|r| {
                let row = &self.entries[r * self.ambient..(r + 1) * self.ambient];
                row.iter().zip(z).map(|(&a, &zi)| zi * a).sum()
            })
            .collect()
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.ambient];
        for (r, &yi) in y.iter().enumerate() {
            let row = &self.entries[r * self.ambient..(r + 1) * self.ambient];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += yi * a;
            }
        }
        out
    }
}

/// Subsampled orthonormal transform with random signs: rows drawn from a
/// normalized Hadamard matrix, right-multiplied by a random +-1 diagonal.
/// The transform size must be a power of two; recovery tests embed odd
/// steering lengths by zero padding.
#[derive(Debug, Clone)]
pub struct Sors {
    pub n: usize,
    pub indices: Vec<usize>,
    pub signs: Vec<i8>,
    pub seed: u64,
}

impl Sors {
    pub fn draw(n: usize, m: usize, seed: u64) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::UnsupportedTransformSize(n));
        }
        let mut r = rng::substream(seed, rng::Domain::Operator, 0);
        let indices = (0..m).map(|_| r.gen_range(0..n)).collect();
        let signs = (0..n).map(|_| if r.gen::<bool>() { 1 } else { -1 }).collect();
        Ok(Self {
            n,
            indices,
            signs,
            seed,
        })
    }

    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    pub(crate) fn hadamard_sign(i: usize, j: usize) -> f64 {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        let norm = 1.0 / (self.n as f64).sqrt();
        self.indices
            .iter()
            .map(|&i| {
                let mut acc = Complex64::default();
                for (j, &zj) in z.iter().enumerate() {
                    acc += zj * (Self::hadamard_sign(i, j) * self.signs[j] as f64);
                }
                acc * norm
            })
            .collect()
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let norm = 1.0 / (self.n as f64).sqrt();
        let mut out = vec![Complex64::default(); self.n];
        for (&i, &yi) in self.indices.iter().zip(y) {
            for (j, o) in out.iter_mut().enumerate() {
                *o += yi * (Self::hadamard_sign(i, j) * self.signs[j] as f64 * norm);
            }
        }
        out
    }
}
