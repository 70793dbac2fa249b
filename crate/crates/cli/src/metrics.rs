//! Noise injection and the assignment-matched resolution-error metric.

use linespec_core::error::{Error, Result};
use linespec_core::rng;
use linespec_core::spectral::{wrap_distance, FrequencyPoint};
use num_complex::Complex64;

/// Scale complex Gaussian noise so that ||y||^2 / ||n||^2 equals the
/// target ratio exactly (exact-realization convention). Returns the noisy
/// vector and the realized noise.
pub fn add_noise(
    y: &[Complex64],
    snr_db: Option<f64>,
    seed: u64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let Some(db) = snr_db else {
        return Ok((y.to_vec(), vec![Complex64::default(); y.len()]));
    };
    let y_energy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    if y_energy == 0.0 {
        return Err(Error::ZeroSignalNoise);
    }
    let mut r = rng::seeded(seed);
    let mut n: Vec<Complex64> = (0..y.len()).map(|_| rng::complex_gaussian(&mut r)).collect();
    let n_energy: f64 = n.iter().map(|v| v.norm_sqr()).sum();
    let snr = 10f64.powf(db / 10.0);
    let scale = (y_energy / (snr * n_energy)).sqrt();
    for v in n.iter_mut() {
        *v *= scale;
    }
    let noisy = y.iter().zip(&n).map(|(a, b)| a + b).collect();
    Ok((noisy, n))
}

/// Minimum-cost perfect assignment on a square cost matrix (shortest
/// augmenting path with potentials). Returns (total cost, column of each
/// row).
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row assigned to column j (1-based)
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
            total += cost[p[j] - 1][j - 1];
        }
    }
    (total, assignment)
}

/// Weighted wrap-aware Euclidean distance between two parameter points.
pub fn weighted_wrap_distance(a: &FrequencyPoint, b: &FrequencyPoint, weights: &[f64]) -> f64 {
    a.coords()
        .iter()
        .zip(b.coords())
        .zip(weights)
        .map(|((&x, &y), &w)| {
            let d = w * wrap_distance(x, y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Assignment-matched resolution error, averaged over the true targets.
/// A true target left unmatched (estimate count deficit, or a cheaper
/// penalty than any remaining estimate) contributes the wrap diameter
/// under the weights.
pub fn resolution_error(
    truth: &[FrequencyPoint],
    estimates: &[FrequencyPoint],
    weights: &[f64],
) -> f64 {
    let s = truth.len();
    if s == 0 {
        return 0.0;
    }
    let penalty = weights.iter().map(|&w| 0.25 * w * w).sum::<f64>().sqrt();
    if estimates.is_empty() {
        return penalty;
    }
    let e = estimates.len();
    let n = s.max(e);
    let mut cost = vec![vec![0.0f64; n]; n];
    for (i, row) in cost.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = if i < s && j < e {
                weighted_wrap_distance(&truth[i], &estimates[j], weights).min(penalty)
            } else if i < s {
                // virtual estimate: true target unmatched
                penalty
            } else {
                // virtual true target absorbs surplus estimates for free
                0.0
            };
        }
    }
    let (total, _) = min_cost_assignment(&cost);
    total / s as f64
}
