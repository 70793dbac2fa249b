//! The squared Fejér kernel F(t) = (sin(R pi t) / (R sin(pi t)))^4 with
//! R = N/2 + 1, its exact Fourier coefficients, derivatives up to order
//! three, the tensor kernel G-bar, and the g_m coefficient vectors that
//! parameterize every certificate.
//!
//! Coefficients are built by integer-weighted self-convolution of the
//! triangular Fejér sequence, so the identities sum(g_k) = R and
//! |g_k| <= 1 hold without round-off. Evaluation near integer arguments
//! switches to an even Taylor expansion about zero; certificate margins
//! are of order 1e-3, so the kernel must be accurate far below that.

use crate::error::{Error, Result};
use crate::spectral::{Bandwidth, FrequencyPoint};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Squared Fejér kernel of even degree N.
#[derive(Debug, Clone)]
pub struct SquaredFejer {
    n: usize,
    r: usize,
    /// Integer convolution weights w_k = sum_j (R-|j|)(R-|k-j|), k = -N..N.
    weights: Vec<u64>,
    /// g_k = w_k / R^3, the coefficients in F(t) = (1/R) sum g_k e^{i2pi tk}.
    g: Vec<f64>,
    /// Even derivatives F^(2j)(0) for j = 0..=5, for the near-zero branch.
    taylor: [f64; 6],
}

/// Switch to the Taylor branch when |sin(pi t)| falls below this.
const NEAR_INTEGER_SIN: f64 = 1e-6;

pub const MAX_KERNEL_ORDER: usize = 3;
pub const MAX_TENSOR_ORDER: usize = 4;

impl SquaredFejer {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidBandwidth(n));
        }
        let r = n / 2 + 1;
        let tri: Vec<u64> = (-(r as i64 - 1)..=(r as i64 - 1))
            .map(|j| (r as i64 - j.abs()) as u64)
            .collect();
        let mut weights = vec![0u64; 2 * n + 1];
        for (i, &a) in tri.iter().enumerate() {
            for (j, &b) in tri.iter().enumerate() {
                weights[i + j] += a * b;
            }
        }
        let r3 = (r as f64).powi(3);
        let g: Vec<f64> = weights.iter().map(|&w| w as f64 / r3).collect();
        let mut taylor = [0.0; 6];
        for (j, t) in taylor.iter_mut().enumerate() {
            let mut s = 0.0;
            for (idx, &gv) in g.iter().enumerate() {
                let v = idx as f64 - n as f64;
                s += gv * v.powi(2 * j as i32);
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *t = sign * TAU.powi(2 * j as i32) * s / r as f64;
        }
        Ok(Self {
            n,
            r,
            weights,
            g,
            taylor,
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Coefficients g_k indexed k = -N..N.
    pub fn coeffs(&self) -> &[f64] {
        &self.g
    }

    /// Exact integer weights R^3 g_k.
    pub fn integer_weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn coeff(&self, k: i64) -> f64 {
        let idx = k + self.n as i64;
        if idx < 0 || idx as usize >= self.g.len() {
            0.0
        } else {
            self.g[idx as usize]
        }
    }

    /// kappa = sqrt(|F''(0)|) = sqrt(pi^2/3 (N^2 + 4N)).
    pub fn kappa(&self) -> f64 {
        let n = self.n as f64;
        (PI * PI / 3.0 * (n * n + 4.0 * n)).sqrt()
    }

    /// F and its first `max_order` derivatives at t (1-periodic).
    pub fn eval_derivs(&self, t: f64, max_order: usize) -> Result<Vec<f64>> {
        if max_order > MAX_KERNEL_ORDER {
            return Err(Error::OrderTooHigh {
                got: max_order,
                max: MAX_KERNEL_ORDER,
            });
        }
        let tt = t - t.round();
        // The quotient recursion amplifies round-off like 1/t per
        // derivative order, so near integers the closed form is unusable
        // for order 3 long before sin(pi t) underflows. The Taylor window
        // |t| <= 0.05/N keeps truncation below 1e-12 while covering the
        // whole cancellation zone.
        if (PI * tt).sin().abs() < NEAR_INTEGER_SIN || tt.abs() * self.n as f64 <= 0.05 {
            return Ok((0..=max_order).map(|m| self.taylor_eval(tt, m)).collect());
        }
        let rf = self.r as f64;
        let rp = rf * PI;
        let (s_r, c_r) = (rp * tt).sin_cos();
        let (s_1, c_1) = (PI * tt).sin_cos();
        // numerator sin(R pi t) derivatives and denominator R sin(pi t) derivatives
        let num = [s_r, rp * c_r, -rp * rp * s_r, -rp * rp * rp * c_r];
        let den = [
            rf * s_1,
            rf * PI * c_1,
            -rf * PI * PI * s_1,
            -rf * PI * PI * PI * c_1,
        ];
        // u = num/den via Leibniz: num^(k) = sum_j C(k,j) u^(j) den^(k-j)
        const BINOM: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [1.0, 3.0, 3.0, 1.0],
        ];
        let mut u = [0.0f64; 4];
        for k in 0..=max_order {
            let mut acc = num[k];
            for j in 0..k {
                acc -= BINOM[k][j] * u[j] * den[k - j];
            }
            u[k] = acc / den[0];
        }
        let (u0, u1, u2, u3) = (u[0], u[1], u[2], u[3]);
        let mut out = Vec::with_capacity(max_order + 1);
        out.push(u0.powi(4));
        if max_order >= 1 {
            out.push(4.0 * u0.powi(3) * u1);
        }
        if max_order >= 2 {
            out.push(12.0 * u0 * u0 * u1 * u1 + 4.0 * u0.powi(3) * u2);
        }
        if max_order >= 3 {
            out.push(
                24.0 * u0 * u1.powi(3) + 36.0 * u0 * u0 * u1 * u2 + 4.0 * u0.powi(3) * u3,
            );
        }
        Ok(out)
    }

    /// Order-th derivative of F at t.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        Ok(self.eval_derivs(t, order)?[order])
    }

    /// Even Taylor series F(t) = sum_j F^{(2j)}(0) t^{2j}/(2j)! truncated
    /// at j = 5, differentiated `order` times.
    fn taylor_eval(&self, t: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (j, &c) in self.taylor.iter().enumerate() {
            let p = 2 * j;
            if p < order {
                continue;
            }
            let mut denom = 1.0;
            for q in 1..=(p - order) {
                denom *= q as f64;
            }
            acc += c / denom * t.powi((p - order) as i32);
        }
        acc
    }

    /// Tensor kernel partial derivative: prod_l F^{(n_l)}(delta_l).
    /// Total order is capped at 4, per-coordinate order at 3.
    pub fn tensor_eval(&self, delta: &[f64], orders: &[usize]) -> Result<f64> {
        if delta.len() != orders.len() {
            return Err(Error::LengthMismatch {
                what: "tensor derivative orders",
                expected: delta.len(),
                got: orders.len(),
            });
        }
        let total: usize = orders.iter().sum();
        if total > MAX_TENSOR_ORDER || orders.iter().any(|&o| o > MAX_KERNEL_ORDER) {
            return Err(Error::OrderTooHigh {
                got: total,
                max: MAX_TENSOR_ORDER,
            });
        }
        let mut acc = 1.0;
        for (&d, &o) in delta.iter().zip(orders) {
            acc *= self.eval(d, o)?;
        }
        Ok(acc)
    }

    /// Coefficient vector g_m(r): entry at multi-index p equals
    /// (1/R^d) prod_l g_{p_l} (i 2 pi p_l)^{m_l} e^{-i 2 pi <p, r>}.
    /// Satisfies inner(g_m(r_k), f^(n)(r)) = Gbar^{(m+n)}(r - r_k).
    pub fn gm_vector(&self, r: &FrequencyPoint, m: &[usize]) -> Result<Vec<Complex64>> {
        let d = r.dim();
        if m.len() != d {
            return Err(Error::LengthMismatch {
                what: "gm multi-index",
                expected: d,
                got: m.len(),
            });
        }
        if m.iter().sum::<usize>() > 2 {
            return Err(Error::OrderTooHigh {
                got: m.iter().sum(),
                max: 2,
            });
        }
        let band = Bandwidth::isotropic(d, self.n)?;
        let rd = (self.r as f64).powi(d as i32);
        let tables: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                let l = 2 * self.n + 1;
                let mut t = Vec::with_capacity(l);
                for idx in 0..l {
                    let p = idx as i64 - self.n as i64;
                    let angle = -TAU * r.coord(a) * p as f64;
                    let mut v = Complex64::new(angle.cos(), angle.sin()) * self.g[idx];
                    if m[a] > 0 {
                        v *= Complex64::new(0.0, TAU * p as f64).powu(m[a] as u32);
                    }
                    t.push(v);
                }
                t
            })
            .collect();
        let mut out = vec![Complex64::default(); band.ambient()];
        band.for_each_index(|flat, p| {
            let mut v = Complex64::new(1.0 / rd, 0.0);
            for (a, &pa) in p.iter().enumerate() {
                v *= tables[a][(pa + self.n as i64) as usize];
            }
            out[flat] = v;
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;
    use crate::spectral::steering_derivative;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn rejects_odd_degree() {
        assert!(SquaredFejer::new(5).is_err());
        assert!(SquaredFejer::new(0).is_err());
    }

    #[test]
    fn coefficient_identities_are_exact() {
        for n in [4usize, 16, 64] {
            let k = SquaredFejer::new(n).unwrap();
            let r = k.r() as u64;
            let total: u64 = k.integer_weights().iter().sum();
            assert_eq!(total, r * r * r * r);
            assert!(k.coeffs().iter().all(|&g| g.abs() <= 1.0 + 1e-15));
            let l = k.coeffs().len();
            for i in 0..l {
                assert_eq!(k.integer_weights()[i], k.integer_weights()[l - 1 - i]);
            }
        }
    }

    #[test]
    fn value_at_zero_is_one() {
        let k = SquaredFejer::new(16).unwrap();
        assert_abs_diff_eq!(k.eval(0.0, 0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k.eval(1.0, 0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k.eval(-3.0, 0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn kappa_matches_closed_form_and_second_derivative() {
        for n in [4usize, 16, 64] {
            let k = SquaredFejer::new(n).unwrap();
            let nf = n as f64;
            let expect = PI * PI / 3.0 * (nf * nf + 4.0 * nf);
            assert_abs_diff_eq!(k.kappa() * k.kappa(), expect, epsilon = 1e-9 * expect);
            let f2 = k.eval(0.0, 2).unwrap();
            assert_abs_diff_eq!(-f2, expect, epsilon = 1e-9 * expect);
        }
        let k4 = SquaredFejer::new(4).unwrap();
        assert_abs_diff_eq!(k4.kappa() * k4.kappa(), 105.27578027828648, epsilon = 1e-9);
    }

    #[test]
    fn degree_to_kappa_ratio_stays_bounded() {
        let mut n = 4;
        while n <= 256 {
            let k = SquaredFejer::new(n).unwrap();
            let ratio = TAU * n as f64 / k.kappa();
            for m in 0..=2 {
                assert!(ratio.powi(m) <= 12.0 + 1e-12);
            }
            n *= 2;
        }
    }

    #[test]
    fn closed_form_matches_coefficient_expansion() {
        let mut rng = crate::rng::seeded(31);
        for &n in &[4usize, 16] {
            let k = SquaredFejer::new(n).unwrap();
            for trial in 0..1000 {
                let t = if trial == 0 { 0.3 } else { rng.gen::<f64>() };
                let direct = k.eval(t, 0).unwrap();
                let mut series = 0.0;
                for (idx, &g) in k.coeffs().iter().enumerate() {
                    let v = idx as f64 - n as f64;
                    series += g * (TAU * t * v).cos();
                }
                series /= k.r() as f64;
                assert_abs_diff_eq!(direct, series, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn coefficients_match_dft_of_samples() {
        let n = 16usize;
        let k = SquaredFejer::new(n).unwrap();
        let l = 2 * n + 1;
        let samples: Vec<f64> = (0..l)
            .map(|j| k.eval(j as f64 / l as f64, 0).unwrap())
            .collect();
        for ki in -(n as i64)..=(n as i64) {
            let mut acc = Complex64::default();
            for (j, &s) in samples.iter().enumerate() {
                let ang = -TAU * ki as f64 * j as f64 / l as f64;
                acc += Complex64::new(ang.cos(), ang.sin()) * s;
            }
            let got = acc * k.r() as f64 / l as f64;
            assert_abs_diff_eq!(got.re, k.coeff(ki), epsilon = 1e-10);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let k = SquaredFejer::new(16).unwrap();
        let h = 1e-5;
        let kappa = k.kappa();
        for &t in &[0.06, 0.17, 0.43, 0.71] {
            for order in 1..=3usize {
                let exact = k.eval(t, order).unwrap();
                let up = k.eval(t + h, order - 1).unwrap();
                let dn = k.eval(t - h, order - 1).unwrap();
                let fd = (up - dn) / (2.0 * h);
                let scale = kappa.powi(order as i32).max(exact.abs());
                assert!(
                    (fd - exact).abs() <= 1e-5 * scale,
                    "order {order} at t={t}: fd {fd} vs exact {exact}"
                );
            }
        }
    }

    #[test]
    fn taylor_branch_agrees_with_closed_form_at_the_seam() {
        for n in [4usize, 16, 64] {
            let k = SquaredFejer::new(n).unwrap();
            let seam = 0.05 / n as f64;
            // just above the seam both paths are in their accurate range
            for factor in [1.001, 1.05, 1.1] {
                let t = seam * factor;
                for order in 0..=3usize {
                    let closed = k.eval(t, order).unwrap();
                    let taylor = k.taylor_eval(t, order);
                    let scale = k.kappa().powi(order as i32);
                    assert!(
                        (closed - taylor).abs() <= 1e-8 * scale + 1e-12,
                        "n {n} order {order} t {t}: closed {closed} vs taylor {taylor}"
                    );
                }
            }
        }
    }

    #[test]
    fn periodicity() {
        let k = SquaredFejer::new(8).unwrap();
        for &t in &[0.1, 0.37, 0.92] {
            assert_abs_diff_eq!(
                k.eval(t, 0).unwrap(),
                k.eval(t + 1.0, 0).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn tensor_values_at_zero() {
        let k = SquaredFejer::new(16).unwrap();
        let zero = [0.0, 0.0, 0.0];
        assert_abs_diff_eq!(k.tensor_eval(&zero, &[0, 0, 0]).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(k.tensor_eval(&zero, &[1, 0, 0]).unwrap(), 0.0, epsilon = 1e-10);
        let kappa2 = k.kappa() * k.kappa();
        assert_abs_diff_eq!(
            k.tensor_eval(&zero, &[2, 0, 0]).unwrap(),
            -kappa2,
            epsilon = 1e-8 * kappa2
        );
    }

    #[test]
    fn tensor_order_caps() {
        let k = SquaredFejer::new(4).unwrap();
        assert!(k.tensor_eval(&[0.1, 0.2], &[3, 2]).is_err());
        assert!(k.tensor_eval(&[0.1], &[4]).is_err());
        assert!(k.tensor_eval(&[0.1, 0.2, 0.0], &[2, 1, 1]).is_ok());
    }

    #[test]
    fn gm_zero_order_reproduces_kernel() {
        let n = 8usize;
        let k = SquaredFejer::new(n).unwrap();
        let band = Bandwidth::isotropic(1, n).unwrap();
        let mut rng = crate::rng::seeded(77);
        for _ in 0..100 {
            let r0 = FrequencyPoint::new(&[rng.gen::<f64>()]).unwrap();
            let r = FrequencyPoint::new(&[rng.gen::<f64>()]).unwrap();
            let g0 = k.gm_vector(&r0, &[0]).unwrap();
            let f = steering_derivative(&r, &[0], &band).unwrap();
            let got = inner(&g0, &f);
            let expect = k.eval(r.coord(0) - r0.coord(0), 0).unwrap();
            assert!((got - Complex64::new(expect, 0.0)).norm() <= 1e-9);
        }
    }

    #[test]
    fn gm_reproducing_identity_with_derivatives() {
        let n = 8usize;
        let k = SquaredFejer::new(n).unwrap();
        let kappa = k.kappa();
        let band = Bandwidth::isotropic(3, n).unwrap();
        let mut rng = crate::rng::seeded(78);
        let ms: [[usize; 3]; 4] = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 2]];
        let ns: [[usize; 3]; 4] = [[0, 0, 0], [1, 0, 0], [0, 1, 1], [0, 2, 0]];
        for _ in 0..10 {
            let rk = FrequencyPoint::new(&[rng.gen(), rng.gen(), rng.gen()]).unwrap();
            let r = FrequencyPoint::new(&[rng.gen(), rng.gen(), rng.gen()]).unwrap();
            let delta = r.wrap_offset(&rk);
            for m in &ms {
                if m.iter().sum::<usize>() > 2 {
                    continue;
                }
                let gm = k.gm_vector(&rk, m).unwrap();
                for nn in &ns {
                    let total: usize = m.iter().sum::<usize>() + nn.iter().sum::<usize>();
                    if total > 4
                        || m.iter().zip(nn).any(|(a, b)| a + b > MAX_KERNEL_ORDER)
                        || nn.iter().sum::<usize>() > 3
                    {
                        continue;
                    }
                    let f = steering_derivative(&r, nn, &band).unwrap();
                    let got = inner(&gm, &f);
                    let orders: Vec<usize> = m.iter().zip(nn).map(|(a, b)| a + b).collect();
                    let expect = k.tensor_eval(&delta, &orders).unwrap();
                    let tol = 1e-8 * kappa.powi(total as i32).max(1.0);
                    assert!(
                        (got - Complex64::new(expect, 0.0)).norm() <= tol,
                        "m={m:?} n={nn:?}: got {got}, expect {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn gm_sup_norm_bound() {
        let n = 16usize;
        let k = SquaredFejer::new(n).unwrap();
        let r = FrequencyPoint::new(&[0.3, 0.6, 0.05]).unwrap();
        for m in [[0, 0, 0], [1, 0, 0], [0, 1, 1]] {
            let gm = k.gm_vector(&FrequencyPoint::new(r.coords()).unwrap(), &m).unwrap();
            let total: usize = m.iter().sum();
            let bound = (TAU * n as f64).powi(total as i32) / (k.r() as f64).powi(3);
            let max = gm.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(max <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gm_at_zero_phase_is_real_scaled_coeffs() {
        let n = 6usize;
        let k = SquaredFejer::new(n).unwrap();
        let r = FrequencyPoint::new(&[0.0]).unwrap();
        let g0 = k.gm_vector(&r, &[0]).unwrap();
        for (idx, v) in g0.iter().enumerate() {
            let ki = idx as i64 - n as i64;
            assert_abs_diff_eq!(v.re, k.coeff(ki) / k.r() as f64, epsilon = 1e-14);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
        }
    }
}
