//! Iterative adaptive weighted-least-squares spectral estimation over the
//! grid dictionary (the single-snapshot IAA-APES iteration), used as the
//! comparison baseline for the convex programs.
//!
//! The iteration keeps the M x M covariance R = B diag(p) B^H and updates
//! every grid amplitude through s_i = d_i^H R^{-1} y / (d_i^H R^{-1} d_i).
//! Dictionary columns are never materialized: covariance columns come
//! from operator applies, and the denominator diag(B^H R^{-1} B) streams
//! through rows of L^{-1} B with R = L L^H.

use crate::error::{Error, Result};
use crate::grid::GridDictionary;
use crate::linalg;
use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IaaConfig {
    pub iterations: usize,
    /// Diagonal loading, as a fraction of trace(R)/M.
    pub loading: f64,
}

impl Default for IaaConfig {
    fn default() -> Self {
        Self {
            iterations: 15,
            loading: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IaaResult {
    pub amplitudes: Vec<Complex64>,
    pub powers: Vec<f64>,
    pub iterations: usize,
}

/// diag(B^H X B) for X = C^H C given column-wise rows of C B, streamed to
/// keep memory at one grid vector.
fn stream_denominators(
    dict: &GridDictionary,
    chol_l_adjoint: &DMatrix<Complex64>,
    out: &mut [f64],
) {
    let m = dict.rows();
    out.fill(0.0);
    for r in 0..m {
        let mut e = DVector::<Complex64>::zeros(m);
        e[r] = Complex64::new(1.0, 0.0);
        // column r of L^{-H}: solve L^H x = e_r
        let x = chol_l_adjoint
            .clone()
            .solve_upper_triangular(&e)
            .expect("triangular factor is invertible");
        let row: Vec<Complex64> = x.iter().copied().collect();
        let brow = dict.adjoint(&row);
        for (o, v) in out.iter_mut().zip(&brow) {
            *o += v.norm_sqr();
        }
    }
}

pub fn iaa_solve(dict: &GridDictionary, y: &[Complex64], config: &IaaConfig) -> Result<IaaResult> {
    if config.iterations == 0 {
        return Err(Error::Invalid("iaa needs at least one iteration".into()));
    }
    let m = dict.rows();
    if y.len() != m {
        return Err(Error::LengthMismatch {
            what: "measurement length",
            expected: m,
            got: y.len(),
        });
    }
    let n = dict.cells();
    if linalg::norm2(y) == 0.0 {
        return Ok(IaaResult {
            amplitudes: vec![Complex64::default(); n],
            powers: vec![0.0; n],
            iterations: 0,
        });
    }

    // column norms ||d_i||^2 = diag(B^H B), streamed over rows of B
    let mut col_norms_sq = vec![0.0f64; n];
    for r in 0..m {
        let mut e = vec![Complex64::default(); m];
        e[r] = Complex64::new(1.0, 0.0);
        let brow = dict.adjoint(&e);
        for (o, v) in col_norms_sq.iter_mut().zip(&brow) {
            *o += v.norm_sqr();
        }
    }

    // matched-filter initialization p_i = |d_i^H y|^2 / ||d_i||^4
    let bhy = dict.adjoint(y);
    let mut powers: Vec<f64> = bhy
        .iter()
        .zip(&col_norms_sq)
        .map(|(v, &ns)| {
            if ns > 0.0 {
                v.norm_sqr() / (ns * ns)
            } else {
                0.0
            }
        })
        .collect();
    let mut amplitudes = vec![Complex64::default(); n];
    let mut denom = vec![0.0f64; n];

    for _ in 0..config.iterations {
        // R = B diag(p) B^H + loading * (trace/M) I
        let trace: f64 = powers
            .iter()
            .zip(&col_norms_sq)
            .map(|(&p, &ns)| p * ns)
            .sum();
        let lambda = config.loading * trace / m as f64;
        let mut r_mat = DMatrix::<Complex64>::zeros(m, m);
        let mut e = vec![Complex64::default(); m];
        for c in 0..m {
            e[c] = Complex64::new(1.0, 0.0);
            let mut weighted = dict.adjoint(&e);
            e[c] = Complex64::default();
            for (w, &p) in weighted.iter_mut().zip(&powers) {
                *w *= p;
            }
            let col = dict.apply(&weighted);
            for (row, &v) in col.iter().enumerate() {
                r_mat[(row, c)] = v;
            }
        }
        for i in 0..m {
            r_mat[(i, i)] += Complex64::new(lambda, 0.0);
            for j in 0..i {
                let avg = (r_mat[(i, j)] + r_mat[(j, i)].conj()) * 0.5;
                r_mat[(i, j)] = avg;
                r_mat[(j, i)] = avg.conj();
            }
        }
        let chol = Cholesky::new(r_mat).ok_or_else(|| {
            Error::Invalid("covariance factorization failed; increase diagonal loading".into())
        })?;
        // numerators d_i^H R^{-1} y in one adjoint apply
        let riy = chol.solve(&DVector::from_column_slice(y));
        let riy_vec: Vec<Complex64> = riy.iter().copied().collect();
        let num = dict.adjoint(&riy_vec);
        // denominators d_i^H R^{-1} d_i
        let l_adj = chol.l().adjoint();
        stream_denominators(dict, &l_adj, &mut denom);
        for i in 0..n {
            let s = if denom[i] > 0.0 {
                num[i] / denom[i]
            } else {
                Complex64::default()
            };
            amplitudes[i] = s;
            powers[i] = s.norm_sqr();
        }
    }
    Ok(IaaResult {
        amplitudes,
        powers,
        iterations: config.iterations,
    })
}
