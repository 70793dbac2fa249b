//! Trigonometric polynomials in coefficient form:
//! Q(r) = sum_p c_p e^{i 2 pi <p, r>} over the symmetric band.

use crate::error::{Error, Result};
use crate::ft::PartialFourier;
use crate::spectral::Bandwidth;
use num_complex::Complex64;
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub band: Bandwidth,
    pub coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn new(band: Bandwidth, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != band.ambient() {
            return Err(Error::LengthMismatch {
                what: "polynomial coefficients",
                expected: band.ambient(),
                got: coeffs.len(),
            });
        }
        Ok(Self { band, coeffs })
    }

    /// Partial derivative coefficients: multiply by (i 2 pi p_l)^{n_l}.
    pub fn derivative(&self, n: &[usize]) -> Self {
        let mut coeffs = self.coeffs.clone();
        self.band.for_each_index(|flat, p| {
            let mut w = Complex64::new(1.0, 0.0);
            for (a, &na) in n.iter().enumerate() {
                if na > 0 {
                    w *= Complex64::new(0.0, TAU * p[a] as f64).powu(na as u32);
                }
            }
            coeffs[flat] *= w;
        });
        Self {
            band: self.band.clone(),
            coeffs,
        }
    }

    /// Point evaluation by nested Horner-style partial sums.
    pub fn eval(&self, r: &[f64]) -> Complex64 {
        let d = self.band.dim();
        let tables: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                let l = self.band.len(a);
                let half = self.band.half(a) as i64;
                (0..l)
                    .map(|j| {
                        let p = j as i64 - half;
                        let ang = TAU * p as f64 * r[a];
                        Complex64::new(ang.cos(), ang.sin())
                    })
                    .collect()
            })
            .collect();
        match d {
            1 => self
                .coeffs
                .iter()
                .zip(&tables[0])
                .map(|(c, w)| c * w)
                .sum(),
            2 => {
                let l1 = self.band.len(1);
                let mut acc = Complex64::default();
                for (j0, w0) in tables[0].iter().enumerate() {
                    let mut row = Complex64::default();
                    for (j1, w1) in tables[1].iter().enumerate() {
                        row += self.coeffs[j0 * l1 + j1] * w1;
                    }
                    acc += w0 * row;
                }
                acc
            }
            3 => {
                let l1 = self.band.len(1);
                let l2 = self.band.len(2);
                let mut acc = Complex64::default();
                for (j0, w0) in tables[0].iter().enumerate() {
                    let mut plane = Complex64::default();
                    for (j1, w1) in tables[1].iter().enumerate() {
                        let mut row = Complex64::default();
                        let base = (j0 * l1 + j1) * l2;
                        for (j2, w2) in tables[2].iter().enumerate() {
                            row += self.coeffs[base + j2] * w2;
                        }
                        plane += w1 * row;
                    }
                    acc += w0 * plane;
                }
                acc
            }
            _ => unreachable!(),
        }
    }

    /// Derivative evaluation at a point.
    pub fn eval_deriv(&self, r: &[f64], n: &[usize]) -> Complex64 {
        if n.iter().all(|&x| x == 0) {
            return self.eval(r);
        }
        self.derivative(n).eval(r)
    }

    /// Values at every node of the rectangular grid n/K (batch FFT path).
    pub fn eval_on_grid(&self, ft: &PartialFourier, k: &[usize]) -> Vec<Complex64> {
        ft.band_to_grid_eval(&self.coeffs, &self.band, k)
    }
}
