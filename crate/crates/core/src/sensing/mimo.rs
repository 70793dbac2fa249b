//! MIMO radar measurement operator: N_T transmit probes, N_R receive
//! antennas, unknowns over (beta, tau, nu).
//!
//! The angle dimension carries half-bandwidth N_beta = (N_T N_R - 1)/2,
//! so the ambient space is N_T N_R * L^2. The operator is block diagonal
//! over receive antennas; receiver r sees the sum over transmitters j of
//! the Gabor map of probe x_j applied to the (tau, nu) slice at angle
//! frequency v = r N_T + j - N_beta.

use super::gabor::{gabor_slice_adjoint, gabor_slice_apply, probe_correlation, tf_shift};
use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::Bandwidth;
use num_complex::Complex64;
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct MimoRadar {
    pub half: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub probes: Vec<Vec<Complex64>>,
    pub seed: u64,
    corrs: Vec<Vec<Complex64>>,
}

impl MimoRadar {
    /// Probes drawn i.i.d. real N(0, 1/(N_T L)).
    pub fn draw(half: usize, n_t: usize, n_r: usize, seed: u64) -> Result<Self> {
        let l = 2 * half + 1;
        let std = 1.0 / ((n_t * l) as f64).sqrt();
        let mut r = rng::substream(seed, rng::Domain::Probe, 0);
        let probes = (0..n_t)
            .map(|_| {
                (0..l)
                    .map(|_| Complex64::new(rng::standard_normal(&mut r) * std, 0.0))
                    .collect()
            })
            .collect();
        Self::with_probes(half, n_t, n_r, probes, seed)
    }

    pub fn with_probes(
        half: usize,
        n_t: usize,
        n_r: usize,
        probes: Vec<Vec<Complex64>>,
        seed: u64,
    ) -> Result<Self> {
        let l = 2 * half + 1;
        let prod = n_t * n_r;
        if prod < 3 || prod % 2 == 0 {
            return Err(Error::InvalidAntennaProduct(prod));
        }
        if probes.len() != n_t || probes.iter().any(|p| p.len() != l) {
            return Err(Error::LengthMismatch {
                what: "probe set",
                expected: n_t * l,
                got: probes.iter().map(|p| p.len()).sum(),
            });
        }
        let corrs = probes.iter().map(|p| probe_correlation(p)).collect();
        Ok(Self {
            half,
            n_t,
            n_r,
            probes,
            seed,
            corrs,
        })
    }

    pub fn l(&self) -> usize {
        2 * self.half + 1
    }

    /// Angle half-bandwidth (N_T N_R - 1)/2.
    pub fn beta_half(&self) -> usize {
        (self.n_t * self.n_r - 1) / 2
    }

    /// Signal geometry (beta, tau, nu).
    pub fn band(&self) -> Bandwidth {
        Bandwidth::new(vec![self.beta_half(), self.half, self.half])
            .expect("antenna product validated at construction")
    }

    pub fn rows(&self) -> usize {
        self.n_r * self.l()
    }

    pub fn ambient(&self) -> usize {
        self.n_t * self.n_r * self.l() * self.l()
    }

    /// Angle frequency index served by receiver r and transmitter j.
    fn beta_freq(&self, r: usize, j: usize) -> i64 {
        (r * self.n_t + j) as i64 - self.beta_half() as i64
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        let l = self.l();
        let slice = l * l;
        let nb = self.beta_half() as i64;
        let mut out = vec![Complex64::default(); self.rows()];
        for r in 0..self.n_r {
            let y = &mut out[r * l..(r + 1) * l];
            for j in 0..self.n_t {
                let v = self.beta_freq(r, j);
                let base = ((v + nb) as usize) * slice;
                gabor_slice_apply(&self.probes[j], &z[base..base + slice], y);
            }
        }
        out
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let l = self.l();
        let slice = l * l;
        let nb = self.beta_half() as i64;
        let mut out = vec![Complex64::default(); self.ambient()];
        for r in 0..self.n_r {
            let yr = &y[r * l..(r + 1) * l];
            for j in 0..self.n_t {
                let v = self.beta_freq(r, j);
                let base = ((v + nb) as usize) * slice;
                gabor_slice_adjoint(&self.corrs[j], yr, &mut out[base..base + slice]);
            }
        }
        out
    }

    /// Fast per-atom path: the operator applied to the steering vector at
    /// (beta, tau, nu). Equals the stacked receive signals of the radar
    /// relation up to the absorbed phase e^{-i 2 pi beta N_beta} folded
    /// into the target amplitude.
    pub fn atom(&self, beta: f64, tau: f64, nu: f64) -> Vec<Complex64> {
        let l = self.l();
        let shifted: Vec<Vec<Complex64>> =
            self.probes.iter().map(|x| tf_shift(x, tau, nu)).collect();
        let mut out = vec![Complex64::default(); self.rows()];
        for r in 0..self.n_r {
            for j in 0..self.n_t {
                let phase = Complex64::from_polar(1.0, TAU * beta * self.beta_freq(r, j) as f64);
                for p in 0..l {
                    out[r * l + p] += shifted[j][p] * phase;
                }
            }
        }
        out
    }
}
