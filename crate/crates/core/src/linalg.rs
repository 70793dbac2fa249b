//! Dense complex linear algebra helpers shared across modules.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Inner product sum_i a_i conj(b_i). All interpolation identities in this
/// crate are stated for this convention.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn matrix_from_columns(rows: usize, cols: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
}

/// Smallest singular value.
pub fn min_singular_value(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Least-squares fit of `y` against the given columns. Returns the
/// coefficients, the 2-norm residual, and the condition number of the
/// column matrix. Systems with condition number above 1e10 are rejected.
pub fn least_squares(
    columns: &[Vec<Complex64>],
    y: &[Complex64],
) -> Result<(Vec<Complex64>, f64, f64)> {
    if columns.is_empty() {
        return Err(Error::EmptyInput("least squares needs columns"));
    }
    let rows = y.len();
    let a = matrix_from_columns(rows, columns);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v));
    let smin = svd.singular_values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > 1e10 {
        return Err(Error::IllConditioned(cond));
    }
    let rhs = DVector::from_column_slice(y);
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::SingularSystem)?;
    let resid = (&a * &sol - rhs).norm();
    Ok((sol.iter().copied().collect(), resid, cond))
}

/// Eigendecomposition-backed pseudo-solver for a Hermitian positive
/// semidefinite Gram matrix. Repeated measurement rows make the Gram
/// rank-deficient; consistent systems are still projected correctly.
pub struct HermitianPseudoSolver {
    vectors: DMatrix<Complex64>,
    inv_values: Vec<f64>,
    rank: usize,
    dim: usize,
}

impl HermitianPseudoSolver {
    pub fn new(g: DMatrix<Complex64>, rel_tol: f64) -> Self {
        let dim = g.nrows();
        let eig = g.symmetric_eigen();
        let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let cut = max * rel_tol;
        let inv_values: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&v| if v.abs() > cut { 1.0 / v } else { 0.0 })
            .collect();
        let rank = inv_values.iter().filter(|v| **v != 0.0).count();
        Self {
            vectors: eig.eigenvectors,
            inv_values,
            rank,
            dim,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pseudo-inverse application G^+ b.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let v = DVector::from_column_slice(b);
        let mut coeffs = self.vectors.adjoint() * v;
        for (c, &iv) in coeffs.iter_mut().zip(&self.inv_values) {
            *c *= iv;
        }
        (&self.vectors * coeffs).iter().copied().collect()
    }
}

/// Operator norm of a Hermitian linear map given matrix-free, by power
/// iteration with a deterministic start.
pub fn hermitian_operator_norm<F>(dim: usize, apply: F, iters: usize, seed: u64) -> f64
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut rng = crate::rng::seeded(seed ^ 0x9e3779b97f4a7c15);
    let mut v: Vec<Complex64> = (0..dim).map(|_| crate::rng::complex_gaussian(&mut rng)).collect();
    let mut norm_est = 0.0;
    for _ in 0..iters {
        let n = norm2(&v);
        if n == 0.0 {
            return 0.0;
        }
        for x in v.iter_mut() {
            *x /= n;
        }
        let w = apply(&v);
        norm_est = norm2(&w);
        v = w;
    }
    norm_est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pseudo_solver_handles_rank_deficiency() {
        // duplicate a row: G = B B^H with B = [[1,0],[1,0],[0,2]] padded
        let b = matrix_from_columns(
            3,
            &[
                vec![
                    Complex64::new(1.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(2.0, 0.0),
                ],
            ],
        );
        let g = &b * b.adjoint();
        let solver = HermitianPseudoSolver::new(g.clone(), 1e-12);
        assert_eq!(solver.rank(), 2);
        // consistent rhs in the range of G
        let rhs = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(4.0, 0.0),
        ];
        let x = solver.solve(&rhs);
        let gx = &g * DVector::from_column_slice(&x);
        for (a, b) in gx.iter().zip(&rhs) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let cols = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)],
            vec![Complex64::new(0.5, 0.5), Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)],
        ];
        let truth = [Complex64::new(1.5, -0.25), Complex64::new(-0.75, 2.0)];
        let mut y = vec![Complex64::default(); 3];
        for (c, t) in cols.iter().zip(truth) {
            axpy(t, c, &mut y);
        }
        let (sol, resid, cond) = least_squares(&cols, &y).unwrap();
        assert!(resid < 1e-10);
        assert!(cond < 1e3);
        for (s, t) in sol.iter().zip(truth) {
            assert!((s - t).norm() < 1e-10);
        }
    }

    #[test]
    fn least_squares_rejects_duplicate_columns() {
        let c = vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let err = least_squares(&[c.clone(), c], &[Complex64::default(); 2]);
        assert!(matches!(err, Err(Error::IllConditioned(_))));
    }

    #[test]
    fn power_iteration_matches_svd() {
        let m = matrix_from_columns(
            3,
            &[
                vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 1.0), Complex64::default()],
                vec![Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0), Complex64::default()],
                vec![Complex64::default(), Complex64::default(), Complex64::new(0.5, 0.0)],
            ],
        );
        // Hermitian by construction
        let want = spectral_norm(&m);
        let got = hermitian_operator_norm(
            3,
            |v| {
                let x = DVector::from_column_slice(v);
                (&m * x).iter().copied().collect()
            },
            200,
            7,
        );
        assert_abs_diff_eq!(want, got, epsilon = 1e-8);
    }
}
