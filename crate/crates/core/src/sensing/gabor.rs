//! Time-frequency shift machinery and the Gabor radar ensemble.
//!
//! The probing-signal response to a target at (tau, nu) is the
//! time-frequency shifted probe F_nu T_tau x; as a linear map on the 2D
//! coefficient array W[k][q] (k the tau frequency, q the nu frequency,
//! both -N..N) the operator acts as
//!
//!   y_p = (1/L) sum_b x[p-b] V[b,p],   V[b,p] = sum_k W[k,p] w^{-bk},
//!
//! with w = e^{i 2 pi / L} and x taken L-periodic. On on-grid atoms this
//! reduces to a circular shift plus modulation.

use super::dense::dirichlet;
use crate::error::{Error, Result};
use crate::rng;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Index helper for the symmetric range -N..N stored at offset p+N.
#[inline]
fn wrap_idx(p: i64, l: usize) -> usize {
    p.rem_euclid(l as i64) as usize
}

/// Entry x_m of an L-periodic signal stored on the symmetric range.
#[inline]
fn periodic_entry(x: &[Complex64], m: i64) -> Complex64 {
    let half = (x.len() - 1) as i64 / 2;
    x[wrap_idx(m + half, x.len())]
}

/// Fractional circular time shift by L*tau samples:
/// (T_tau x)_p = (1/L) sum_m x_m D((p - m)/L - tau).
pub fn time_shift(x: &[Complex64], tau: f64) -> Vec<Complex64> {
    let l = x.len();
    let lf = l as f64;
    (0..l)
        .map(|jp| {
            let mut acc = Complex64::default();
            for (jm, &xm) in x.iter().enumerate() {
                let diff = (jp as f64 - jm as f64) / lf - tau;
                acc += xm * dirichlet(diff, l);
            }
            acc / lf
        })
        .collect()
}

/// Frequency shift: (F_nu x)_p = x_p e^{i 2 pi p nu}, p = -N..N.
pub fn freq_shift(x: &[Complex64], nu: f64) -> Vec<Complex64> {
    let half = (x.len() - 1) / 2;
    x.iter()
        .enumerate()
        .map(|(j, &v)| {
            let p = j as i64 - half as i64;
            let ang = TAU * p as f64 * nu;
            v * Complex64::new(ang.cos(), ang.sin())
        })
        .collect()
}

/// The shifted probe F_nu T_tau x.
pub fn tf_shift(x: &[Complex64], tau: f64, nu: f64) -> Vec<Complex64> {
    freq_shift(&time_shift(x, tau), nu)
}

/// Structured application of the Gabor map to one 2D coefficient slice.
/// `w` is L*L tau-major, `out` accumulates L output samples.
pub(crate) fn gabor_slice_apply(probe: &[Complex64], w: &[Complex64], out: &mut [Complex64]) {
    let l = probe.len();
    let lf = l as f64;
    // V[b,p] = DFT over the tau-frequency index k at frequency b
    let mut v = vec![Complex64::default(); l * l];
    let half = (l - 1) as i64 / 2;
    for jb in 0..l {
        let b = jb as i64 - half;
        for jp in 0..l {
            let mut acc = Complex64::default();
            for jk in 0..l {
                let k = jk as i64 - half;
                let ang = -TAU * (b * k) as f64 / lf;
                acc += w[jk * l + jp] * Complex64::new(ang.cos(), ang.sin());
            }
            v[jb * l + jp] = acc;
        }
    }
    for jp in 0..l {
        let p = jp as i64 - half;
        let mut acc = Complex64::default();
        for jb in 0..l {
            let b = jb as i64 - half;
            acc += periodic_entry(probe, p - b) * v[jb * l + jp];
        }
        out[jp] += acc / lf;
    }
}

/// Adjoint of [`gabor_slice_apply`]:
/// out[k,q] += u_q conj(C[k,q]) / L with C[k,q] = sum_b x[q-b] w^{-bk}.
pub(crate) fn gabor_slice_adjoint(probe_corr: &[Complex64], u: &[Complex64], out: &mut [Complex64]) {
    let l = u.len();
    let lf = l as f64;
    for jk in 0..l {
        for jq in 0..l {
            out[jk * l + jq] += u[jq] * probe_corr[jk * l + jq].conj() / lf;
        }
    }
}

/// Precompute C[k,q] = sum_b x[q-b] e^{-i 2 pi bk / L} for the adjoint.
pub(crate) fn probe_correlation(probe: &[Complex64]) -> Vec<Complex64> {
    let l = probe.len();
    let lf = l as f64;
    let half = (l - 1) as i64 / 2;
    let mut c = vec![Complex64::default(); l * l];
    for jk in 0..l {
        let k = jk as i64 - half;
        for jq in 0..l {
            let q = jq as i64 - half;
            let mut acc = Complex64::default();
            for jb in 0..l {
                let b = jb as i64 - half;
                let ang = -TAU * (b * k) as f64 / lf;
                acc += periodic_entry(probe, q - b) * Complex64::new(ang.cos(), ang.sin());
            }
            c[jk * l + jq] = acc;
        }
    }
    c
}

/// Gabor radar measurement operator: L samples of the probe response,
/// L^2 unknowns over (tau, nu).
#[derive(Debug, Clone)]
pub struct GaborRadar {
    pub half: usize,
    pub probe: Vec<Complex64>,
    pub seed: u64,
    corr: Vec<Complex64>,
}

impl GaborRadar {
    /// Probe drawn i.i.d. real N(0, 1/L), the single-antenna case of the
    /// radar probing model.
    pub fn draw(half: usize, seed: u64) -> Self {
        let l = 2 * half + 1;
        let mut r = rng::substream(seed, rng::Domain::Probe, 0);
        let std = 1.0 / (l as f64).sqrt();
        let probe = (0..l)
            .map(|_| Complex64::new(rng::standard_normal(&mut r) * std, 0.0))
            .collect();
        Self::with_probe(half, probe, seed).expect("probe length is consistent by construction")
    }

    pub fn with_probe(half: usize, probe: Vec<Complex64>, seed: u64) -> Result<Self> {
        let l = 2 * half + 1;
        if probe.len() != l {
            return Err(Error::LengthMismatch {
                what: "probe length",
                expected: l,
                got: probe.len(),
            });
        }
        let corr = probe_correlation(&probe);
        Ok(Self {
            half,
            probe,
            seed,
            corr,
        })
    }

    pub fn l(&self) -> usize {
        2 * self.half + 1
    }

    pub fn rows(&self) -> usize {
        self.l()
    }

    pub fn ambient(&self) -> usize {
        self.l() * self.l()
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.l()];
        gabor_slice_apply(&self.probe, z, &mut out);
        out
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.ambient()];
        gabor_slice_adjoint(&self.corr, y, &mut out);
        out
    }

    /// Fast per-atom path: the operator applied to the steering vector at
    /// (tau, nu) equals the shifted probe F_nu T_tau x.
    pub fn atom(&self, tau: f64, nu: f64) -> Vec<Complex64> {
        tf_shift(&self.probe, tau, nu)
    }
}
