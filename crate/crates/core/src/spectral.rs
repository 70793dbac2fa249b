//! Steering vectors, sinusoid mixtures, wrap-around geometry, and
//! separation checks shared by every other module.
//!
//! Index layout for multi-dimensional vectors is fixed once here:
//! lexicographic over (coordinate-1 index, then coordinate-2, then
//! coordinate-3), each running -N_l..N_l. For d = 3 the coordinates are
//! interpreted as (beta, tau, nu). All modules reuse this layout.

use crate::error::{Error, Result};
use crate::rng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const MAX_DIM: usize = 3;

/// Wrap-around distance on the unit circle: min(|a-b|, 1-|a-b|).
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn reduce_mod_1(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point in [0,1)^d; coordinates are reduced modulo 1 on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    coords: Vec<f64>,
}

impl FrequencyPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        Ok(Self {
            coords: coords.iter().map(|&c| reduce_mod_1(c)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    /// Points closer than 1e-12 in every coordinate (wrap-aware) are equal.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(&a, &b)| wrap_distance(a, b) < 1e-12)
    }

    /// Coordinate-wise signed wrap offset self - other, each in [-1/2, 1/2).
    pub fn wrap_offset(&self, other: &Self) -> Vec<f64> {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| {
                let mut d = (a - b).rem_euclid(1.0);
                if d >= 0.5 {
                    d -= 1.0;
                }
                d
            })
            .collect()
    }
}

/// Per-dimension half-bandwidths N_l; the ambient signal space has length
/// prod(2 N_l + 1). Isotropic models use the same N on every axis, the
/// MIMO model uses ((N_T N_R - 1)/2, N, N).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bandwidth {
    half: Vec<usize>,
}

impl Bandwidth {
    pub fn new(half: Vec<usize>) -> Result<Self> {
        if half.is_empty() || half.len() > MAX_DIM {
            return Err(Error::UnsupportedDimension(half.len()));
        }
        if half.iter().any(|&n| n == 0) {
            return Err(Error::InvalidBandwidth(0));
        }
        Ok(Self { half })
    }

    pub fn isotropic(dim: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.half.len()
    }

    pub fn half(&self, axis: usize) -> usize {
        self.half[axis]
    }

    pub fn halves(&self) -> &[usize] {
        &self.half
    }

    /// 2 N_l + 1 along one axis.
    pub fn len(&self, axis: usize) -> usize {
        2 * self.half[axis] + 1
    }

    pub fn lens(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.len(a)).collect()
    }

    pub fn ambient(&self) -> usize {
        (0..self.dim()).map(|a| self.len(a)).product()
    }

    /// Row-major strides matching the lexicographic layout.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.len(a + 1);
        }
        s
    }

    /// Flat index of the integer multi-index p, each entry in -N_l..=N_l.
    pub fn flat_index(&self, p: &[i64]) -> usize {
        let strides = self.strides();
        p.iter()
            .enumerate()
            .map(|(a, &pa)| ((pa + self.half[a] as i64) as usize) * strides[a])
            .sum()
    }

    /// Inverse of [`Self::flat_index`].
    pub fn multi_index(&self, mut flat: usize) -> Vec<i64> {
        let strides = self.strides();
        (0..self.dim())
            .map(|a| {
                let q = flat / strides[a];
                flat %= strides[a];
                q as i64 - self.half[a] as i64
            })
            .collect()
    }

    /// Visit every multi-index in layout order.
    pub fn for_each_index<F: FnMut(usize, &[i64])>(&self, mut f: F) {
        let d = self.dim();
        let mut p = [0i64; MAX_DIM];
        for a in 0..d {
            p[a] = -(self.half[a] as i64);
        }
        let total = self.ambient();
        for flat in 0..total {
            f(flat, &p[..d]);
            for a in (0..d).rev() {
                if p[a] < self.half[a] as i64 {
                    p[a] += 1;
                    break;
                }
                p[a] = -(self.half[a] as i64);
            }
        }
    }
}

/// Steering vector f(r): entry at multi-index p equals e^{i 2 pi <p, r>}.
pub fn steering_vector(r: &FrequencyPoint, band: &Bandwidth) -> Result<Vec<Complex64>> {
    if r.dim() != band.dim() {
        return Err(Error::LengthMismatch {
            what: "frequency point dimension",
            expected: band.dim(),
            got: r.dim(),
        });
    }
    let tables: Vec<Vec<Complex64>> = (0..band.dim())
        .map(|a| phase_table(r.coord(a), band.half(a), 1.0))
        .collect();
    Ok(outer_product(&tables, band))
}

/// Derivative-weighted steering vector in the conjugate-phase convention
/// used by the interpolation machinery: entry at p equals
/// prod_l (-i 2 pi p_l)^{n_l} * e^{-i 2 pi <p, r>}. Order 0 is the
/// entrywise conjugate of [`steering_vector`]; differentiating along axis
/// l raises n_l by one.
pub fn steering_derivative(
    r: &FrequencyPoint,
    n: &[usize],
    band: &Bandwidth,
) -> Result<Vec<Complex64>> {
    if r.dim() != band.dim() || n.len() != band.dim() {
        return Err(Error::LengthMismatch {
            what: "derivative multi-index dimension",
            expected: band.dim(),
            got: n.len(),
        });
    }
    let total: usize = n.iter().sum();
    if total > 3 {
        return Err(Error::OrderTooHigh { got: total, max: 3 });
    }
    let tables: Vec<Vec<Complex64>> = (0..band.dim())
        .map(|a| {
            let mut t = phase_table(r.coord(a), band.half(a), -1.0);
            if n[a] > 0 {
                let nh = band.half(a) as i64;
                for (j, v) in t.iter_mut().enumerate() {
                    let p = j as i64 - nh;
                    let factor = Complex64::new(0.0, -TAU * p as f64).powu(n[a] as u32);
                    *v *= factor;
                }
            }
            t
        })
        .collect();
    Ok(outer_product(&tables, band))
}

fn phase_table(coord: f64, half: usize, sign: f64) -> Vec<Complex64> {
    let l = 2 * half + 1;
    let mut out = Vec::with_capacity(l);
    for j in 0..l {
        let p = j as i64 - half as i64;
        let angle = sign * TAU * coord * p as f64;
        out.push(Complex64::new(angle.cos(), angle.sin()));
    }
    out
}

fn outer_product(tables: &[Vec<Complex64>], band: &Bandwidth) -> Vec<Complex64> {
    match tables.len() {
        1 => tables[0].clone(),
        2 => {
            let mut out = Vec::with_capacity(band.ambient());
            for &a in &tables[0] {
                for &b in &tables[1] {
                    out.push(a * b);
                }
            }
            out
        }
        3 => {
            let mut out = Vec::with_capacity(band.ambient());
            for &a in &tables[0] {
                for &b in &tables[1] {
                    let ab = a * b;
                    for &c in &tables[2] {
                        out.push(ab * c);
                    }
                }
            }
            out
        }
        d => unreachable!("dimension {d} rejected at construction"),
    }
}

/// A sparse mixture of complex sinusoids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mixture {
    pub band: Bandwidth,
    pub components: Vec<(Complex64, FrequencyPoint)>,
}

impl Mixture {
    pub fn new(band: Bandwidth, components: Vec<(Complex64, FrequencyPoint)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("mixture needs at least one component"));
        }
        for (_, r) in &components {
            if r.dim() != band.dim() {
                return Err(Error::LengthMismatch {
                    what: "component dimension",
                    expected: band.dim(),
                    got: r.dim(),
                });
            }
        }
        Ok(Self { band, components })
    }

    pub fn sparsity(&self) -> usize {
        self.components.len()
    }

    pub fn locations(&self) -> Vec<FrequencyPoint> {
        self.components.iter().map(|(_, r)| r.clone()).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.components.iter().map(|(b, _)| *b).collect()
    }
}

/// z = sum_k b_k f(r_k); linear in the amplitudes.
pub fn synthesize(m: &Mixture) -> Vec<Complex64> {
    let mut z = vec![Complex64::default(); m.band.ambient()];
    for (b, r) in &m.components {
        let f = steering_vector(r, &m.band).expect("mixture dimensions checked at construction");
        for (zi, fi) in z.iter_mut().zip(f) {
            *zi += b * fi;
        }
    }
    z
}

/// Which pairwise predicate a separation check evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeparationForm {
    /// Pair passes when the max over coordinates of wrap distance meets a
    /// uniform threshold (3D recovery condition).
    MaxAcrossCoordinates,
    /// Pair passes when any single coordinate meets its own threshold
    /// (MIMO or-form condition).
    AnyCoordinate,
}

/// Outcome of a pairwise separation check. `min_score` is the smallest
/// pairwise score in units of the thresholds, so `satisfied == (min_score
/// >= 1)`; a single point is vacuously satisfied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    pub form: SeparationForm,
    pub thresholds: Vec<f64>,
    pub min_score: f64,
    pub per_coordinate_min: Vec<f64>,
    pub satisfied: bool,
}

pub fn check_separation(
    points: &[FrequencyPoint],
    thresholds: &[f64],
    form: SeparationForm,
) -> Result<SeparationReport> {
    if points.is_empty() {
        return Err(Error::EmptyInput("separation check needs points"));
    }
    let d = points[0].dim();
    if thresholds.len() != d {
        return Err(Error::LengthMismatch {
            what: "threshold vector",
            expected: d,
            got: thresholds.len(),
        });
    }
    if form == SeparationForm::MaxAcrossCoordinates
        && thresholds.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-15)
    {
        return Err(Error::NonUniformThreshold);
    }
    let mut min_score = f64::INFINITY;
    let mut per_coord = vec![f64::INFINITY; d];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let mut pair_score: f64 = 0.0;
            for a in 0..d {
                let w = wrap_distance(points[i].coord(a), points[j].coord(a));
                per_coord[a] = per_coord[a].min(w);
                pair_score = pair_score.max(w / thresholds[a]);
            }
            min_score = min_score.min(pair_score);
        }
    }
    Ok(SeparationReport {
        form,
        thresholds: thresholds.to_vec(),
        min_score,
        per_coordinate_min: per_coord,
        satisfied: min_score >= 1.0,
    })
}

/// S unit-modulus signs drawn uniformly on the complex circle.
pub fn random_signs(s: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng::substream(seed, rng::Domain::Signs, 0);
    (0..s).map(|_| rng::unit_circle(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wrap_distance_matches_worked_values() {
        assert_abs_diff_eq!(wrap_distance(0.75, 0.5), 0.25);
        assert_abs_diff_eq!(wrap_distance(5.0 / 6.0, 1.0 / 6.0), 1.0 / 3.0);
        assert_abs_diff_eq!(wrap_distance(0.37, 0.37), 0.0);
    }

    #[test]
    fn steering_at_zero_is_all_ones() {
        let band = Bandwidth::isotropic(2, 3).unwrap();
        let r = FrequencyPoint::new(&[0.0, 0.0]).unwrap();
        let f = steering_vector(&r, &band).unwrap();
        assert_eq!(f.len(), 49);
        for v in f {
            assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_half_frequency_alternates() {
        let band = Bandwidth::isotropic(1, 4).unwrap();
        let r = FrequencyPoint::new(&[0.5]).unwrap();
        let f = steering_vector(&r, &band).unwrap();
        for (j, v) in f.iter().enumerate() {
            let p = j as i64 - 4;
            let expect = if p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(v.re, expect, epsilon = 1e-12);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_norm_is_ambient() {
        let band = Bandwidth::isotropic(3, 2).unwrap();
        let r = FrequencyPoint::new(&[0.21, 0.53, 0.98]).unwrap();
        let f = steering_vector(&r, &band).unwrap();
        assert_eq!(f.len(), 125);
        let norm_sq: f64 = f.iter().map(|v| v.norm_sqr()).sum();
        assert_abs_diff_eq!(norm_sq, 125.0, epsilon = 1e-9);
    }

    #[test]
    fn derivative_order_zero_is_conjugate_steering() {
        let band = Bandwidth::isotropic(3, 2).unwrap();
        let r = FrequencyPoint::new(&[0.1, 0.7, 0.33]).unwrap();
        let f = steering_vector(&r, &band).unwrap();
        let f0 = steering_derivative(&r, &[0, 0, 0], &band).unwrap();
        for (a, b) in f.iter().zip(&f0) {
            assert_abs_diff_eq!(a.conj().re, b.re, epsilon = 1e-14);
            assert_abs_diff_eq!(a.conj().im, b.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_entry_weight_matches_definition() {
        let band = Bandwidth::isotropic(1, 3).unwrap();
        let r = FrequencyPoint::new(&[0.27]).unwrap();
        let f0 = steering_derivative(&r, &[0], &band).unwrap();
        let f1 = steering_derivative(&r, &[1], &band).unwrap();
        for (j, (a, b)) in f0.iter().zip(&f1).enumerate() {
            let p = j as i64 - 3;
            let w = Complex64::new(0.0, -TAU * p as f64);
            let expect = a * w;
            assert_abs_diff_eq!(expect.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(expect.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let band = Bandwidth::isotropic(2, 3).unwrap();
        let r = FrequencyPoint::new(&[0.31, 0.64]).unwrap();
        let h = 1e-5;
        for axis in 0..2 {
            let mut n = [0usize; 2];
            n[axis] = 1;
            let d = steering_derivative(&r, &n, &band).unwrap();
            let mut up = r.coords().to_vec();
            let mut dn = r.coords().to_vec();
            up[axis] += h;
            dn[axis] -= h;
            let fu = steering_derivative(
                &FrequencyPoint::new(&up).unwrap(),
                &[0, 0],
                &band,
            )
            .unwrap();
            let fd = steering_derivative(
                &FrequencyPoint::new(&dn).unwrap(),
                &[0, 0],
                &band,
            )
            .unwrap();
            let scale: f64 = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for ((u, l), exact) in fu.iter().zip(&fd).zip(&d) {
                let fd_est = (u - l) / Complex64::new(2.0 * h, 0.0);
                assert!((fd_est - exact).norm() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn derivative_order_cap() {
        let band = Bandwidth::isotropic(2, 2).unwrap();
        let r = FrequencyPoint::new(&[0.1, 0.2]).unwrap();
        assert!(matches!(
            steering_derivative(&r, &[2, 2], &band),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn synthesize_superposition() {
        let band = Bandwidth::isotropic(1, 4).unwrap();
        let r1 = FrequencyPoint::new(&[0.12]).unwrap();
        let r2 = FrequencyPoint::new(&[0.55]).unwrap();
        let b1 = Complex64::new(0.4, -1.1);
        let b2 = Complex64::new(-0.3, 0.2);
        let m1 = Mixture::new(band.clone(), vec![(b1, r1.clone())]).unwrap();
        let m2 = Mixture::new(band.clone(), vec![(b2, r2.clone())]).unwrap();
        let m12 = Mixture::new(band, vec![(b1, r1), (b2, r2)]).unwrap();
        let z1 = synthesize(&m1);
        let z2 = synthesize(&m2);
        let z12 = synthesize(&m12);
        for ((a, b), c) in z1.iter().zip(&z2).zip(&z12) {
            assert!((a + b - c).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesize_zero_amplitudes() {
        let band = Bandwidth::isotropic(1, 2).unwrap();
        let r = FrequencyPoint::new(&[0.3]).unwrap();
        let m = Mixture::new(band, vec![(Complex64::default(), r)]).unwrap();
        assert!(synthesize(&m).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn separation_boundary_is_inclusive() {
        let n = 16.0;
        let pts = vec![
            FrequencyPoint::new(&[0.0]).unwrap(),
            FrequencyPoint::new(&[2.0 / n]).unwrap(),
        ];
        let rep =
            check_separation(&pts, &[2.0 / n], SeparationForm::MaxAcrossCoordinates).unwrap();
        assert!(rep.satisfied);
        assert_abs_diff_eq!(rep.min_score, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn separation_max_form_single_coordinate_suffices() {
        let n = 16.0;
        let t = 5.0 / n;
        let pts = vec![
            FrequencyPoint::new(&[0.1, 0.2, 0.3]).unwrap(),
            FrequencyPoint::new(&[0.1 + t, 0.2, 0.3]).unwrap(),
        ];
        let rep =
            check_separation(&pts, &[t, t, t], SeparationForm::MaxAcrossCoordinates).unwrap();
        assert!(rep.satisfied);
    }

    #[test]
    fn separation_single_point_vacuous() {
        let pts = vec![FrequencyPoint::new(&[0.5, 0.5]).unwrap()];
        let rep = check_separation(&pts, &[0.1, 0.1], SeparationForm::AnyCoordinate).unwrap();
        assert!(rep.satisfied);
        assert!(rep.min_score.is_infinite());
    }

    #[test]
    fn random_signs_unit_modulus_and_deterministic() {
        let u = random_signs(32, 99);
        let v = random_signs(32, 99);
        for (a, b) in u.iter().zip(&v) {
            assert_abs_diff_eq!(a.norm(), 1.0, epsilon = 1e-15);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_signs_empirical_mean_is_small() {
        let u = random_signs(100_000, 5);
        let mean = u.iter().sum::<Complex64>() / u.len() as f64;
        assert!(mean.norm() <= 0.02);
    }

    #[test]
    fn flat_index_round_trip() {
        let band = Bandwidth::new(vec![2, 3, 1]).unwrap();
        band.for_each_index(|flat, p| {
            assert_eq!(band.flat_index(p), flat);
            assert_eq!(band.multi_index(flat), p.to_vec());
        });
    }
}
