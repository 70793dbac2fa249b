//! Scene generation and the single-trial measurement/recovery pipeline.

use crate::config::{AmpMode, EnsembleKind, Method, SceneMode, Scenario};
use crate::metrics::{add_noise, resolution_error};
use linespec_core::error::{Error, Result};
use linespec_core::grid::{GridDictionary, GridSpec};
use linespec_core::iaa::iaa_solve;
use linespec_core::rng::{self, Domain};
use linespec_core::sensing::{
    GaborRadar, GaussianDense, MeasurementOperator, MimoRadar, OrthogonalFamily, Sors,
    SubsampledOrthogonal, TimeSamples,
};
use linespec_core::solver::{
    extract_support, refit_amplitudes, solve_l1_equality, solve_l1_err, SparseSolution,
};
use linespec_core::spectral::{synthesize, wrap_distance, FrequencyPoint, Mixture};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

/// Draw the target mixture for one trial.
pub fn generate_scene(sc: &Scenario, trial: u64) -> Result<Mixture> {
    let band = sc.band();
    let d = band.dim();
    let mut r = rng::substream(sc.seed, Domain::Scene, trial);
    let amplitudes: Vec<Complex64> = (0..sc.s)
        .map(|_| match sc.amp {
            AmpMode::UnitCircle => rng::unit_circle(&mut r),
            AmpMode::UnitDisc => rng::unit_disc(&mut r),
        })
        .collect();
    let locations: Vec<FrequencyPoint> = match sc.scene {
        SceneMode::OffGridBox => {
            let box_max = sc.box_max.clone().unwrap_or_else(|| default_box(sc, d));
            (0..sc.s)
                .map(|_| {
                    FrequencyPoint::new(
                        &(0..d).map(|a| r.gen::<f64>() * box_max[a]).collect::<Vec<_>>(),
                    )
                })
                .collect::<Result<_>>()?
        }
        SceneMode::OnGridSeparated => {
            let base = sc.base_grid();
            let sep = sc.separation.unwrap_or(2.0 / sc.n as f64);
            let mut pts: Vec<FrequencyPoint> = Vec::new();
            let mut attempts = 0usize;
            while pts.len() < sc.s {
                attempts += 1;
                if attempts > 100_000 {
                    return Err(Error::Invalid(
                        "separation rejection sampling did not terminate".into(),
                    ));
                }
                let coords: Vec<f64> = (0..d)
                    .map(|a| r.gen_range(0..base[a]) as f64 / base[a] as f64)
                    .collect();
                let cand = FrequencyPoint::new(&coords)?;
                let ok = pts.iter().all(|p| {
                    (0..d).any(|a| wrap_distance(p.coord(a), cand.coord(a)) >= sep)
                });
                if ok {
                    pts.push(cand);
                }
            }
            pts
        }
        SceneMode::CoarseDiagonal => {
            let base = sc.base_grid();
            (0..sc.s)
                .map(|k| {
                    FrequencyPoint::new(
                        &(0..d)
                            .map(|a| (k % base[a]) as f64 / base[a] as f64)
                            .collect::<Vec<_>>(),
                    )
                })
                .collect::<Result<_>>()?
        }
        SceneMode::CoarseRandom => {
            let base = sc.base_grid();
            let mut cells: Vec<Vec<usize>> = Vec::new();
            let mut attempts = 0usize;
            while cells.len() < sc.s {
                attempts += 1;
                if attempts > 100_000 {
                    return Err(Error::Invalid(
                        "coarse-cell rejection sampling did not terminate".into(),
                    ));
                }
                let cand: Vec<usize> = (0..d).map(|a| r.gen_range(0..base[a])).collect();
                // distinct from every chosen cell in every coordinate
                let ok = cells
                    .iter()
                    .all(|c| (0..d).all(|a| c[a] != cand[a]));
                if ok {
                    cells.push(cand);
                }
            }
            cells
                .iter()
                .map(|c| {
                    FrequencyPoint::new(
                        &(0..d)
                            .map(|a| c[a] as f64 / base[a] as f64)
                            .collect::<Vec<_>>(),
                    )
                })
                .collect::<Result<_>>()?
        }
    };
    Mixture::new(band, amplitudes.into_iter().zip(locations).collect())
}

fn default_box(sc: &Scenario, d: usize) -> Vec<f64> {
    match sc.ensemble {
        EnsembleKind::Mimo => {
            let b = 2.0 / (sc.l() as f64).sqrt();
            vec![1.0, b, b]
        }
        _ => vec![1.0; d],
    }
}

/// Build the measurement operator for one trial.
pub fn build_operator(sc: &Scenario, trial: u64) -> Result<MeasurementOperator> {
    let seed = rng::derive_seed(sc.seed, Domain::Operator, trial);
    let band = sc.band();
    Ok(match sc.ensemble {
        EnsembleKind::SubsampledIdentity => MeasurementOperator::Subsampled(
            SubsampledOrthogonal::draw(OrthogonalFamily::Identity, band.ambient(), sc.m, seed),
        ),
        EnsembleKind::SubsampledFourier => MeasurementOperator::Subsampled(
            SubsampledOrthogonal::draw(OrthogonalFamily::Fourier, band.ambient(), sc.m, seed),
        ),
        EnsembleKind::TimeSamples => {
            if band.dim() != 1 {
                return Err(Error::UnsupportedDimension(band.dim()));
            }
            MeasurementOperator::TimeSamples(TimeSamples::draw(sc.n, sc.m, seed))
        }
        EnsembleKind::Gaussian => {
            MeasurementOperator::Gaussian(GaussianDense::draw(band.ambient(), sc.m, seed))
        }
        EnsembleKind::Sors => {
            let n = band.ambient().next_power_of_two();
            MeasurementOperator::Sors(Sors::draw(n, sc.m, seed)?)
        }
        EnsembleKind::Gabor => MeasurementOperator::Gabor(GaborRadar::draw(sc.n, seed)),
        EnsembleKind::Mimo => {
            MeasurementOperator::Mimo(MimoRadar::draw(sc.n, sc.n_t, sc.n_r, seed)?)
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub srf: usize,
    /// None means noiseless.
    pub snr_db: Option<f64>,
    pub method: &'static str,
    pub resolution_error: f64,
    pub support_exact: bool,
    pub converged: bool,
    pub iterations: usize,
    pub seconds: f64,
}

pub struct TrialDetail {
    pub outcome: TrialOutcome,
    pub truth: Mixture,
    pub estimates: Vec<FrequencyPoint>,
    pub amplitudes: Vec<Complex64>,
    pub solution: Option<SparseSolution>,
}

/// Run one (trial, srf, snr, method) cell end to end: scene, measure,
/// noise, solve, extract, refit, score.
pub fn run_trial(
    sc: &Scenario,
    trial: u64,
    srf: usize,
    snr_db: Option<f64>,
    method: Method,
) -> Result<TrialDetail> {
    let start = std::time::Instant::now();
    let mixture = generate_scene(sc, trial)?;
    let op = build_operator(sc, trial)?;
    let band = sc.band();
    let z = synthesize(&mixture);
    let y_clean = if z.len() == op.ambient() {
        op.apply(&z)
    } else {
        let mut padded = vec![Complex64::default(); op.ambient()];
        padded[..z.len()].copy_from_slice(&z);
        op.apply(&padded)
    };
    let snr_index = sc
        .snr_db
        .iter()
        .position(|&s| s == snr_db)
        .unwrap_or(0) as u64;
    let noise_seed = rng::derive_seed(sc.seed, Domain::Noise, trial * 64 + snr_index);
    let (y, noise) = add_noise(&y_clean, snr_db, noise_seed)?;
    let noise_energy: f64 = noise.iter().map(|v| v.norm_sqr()).sum();

    let spec = GridSpec::oversampled(&sc.base_grid(), srf, &band)?;
    let grid_sizes = spec.sizes().to_vec();
    let dict = GridDictionary::new(op, band.clone(), spec)?;

    let m = dict.rows() as f64;
    let eta = if noise_energy > 0.0 {
        sc.eta_scale * noise_energy * (1.0 + 2.0 / m.sqrt())
    } else {
        0.0
    };

    let (peaks, converged, iterations, solution, tag): (
        Vec<(Vec<usize>, Complex64)>,
        bool,
        usize,
        Option<SparseSolution>,
        &'static str,
    ) = match method {
        Method::L1Eq => {
            let sol = solve_l1_equality(&dict, &y, &sc.solver)?;
            let peaks = extract_support(
                &sol.coeffs,
                &grid_sizes,
                sc.min_magnitude_fraction,
                sc.merge_radius_cells,
            );
            (
                peaks,
                sol.diagnostics.converged,
                sol.diagnostics.iterations,
                Some(sol),
                "l1eq",
            )
        }
        Method::L1Err => {
            let sol = solve_l1_err(&dict, &y, eta, &sc.solver)?;
            let peaks = extract_support(
                &sol.coeffs,
                &grid_sizes,
                sc.min_magnitude_fraction,
                sc.merge_radius_cells,
            );
            (
                peaks,
                sol.diagnostics.converged,
                sol.diagnostics.iterations,
                Some(sol),
                "l1err",
            )
        }
        Method::Iaa => {
            let out = iaa_solve(&dict, &y, &sc.iaa)?;
            let powers: Vec<Complex64> =
                out.powers.iter().map(|&p| Complex64::new(p, 0.0)).collect();
            let peaks = extract_support(
                &powers,
                &grid_sizes,
                sc.min_magnitude_fraction,
                sc.merge_radius_cells,
            );
            (peaks, true, out.iterations, None, "iaa")
        }
        Method::Compare => {
            return Err(Error::Invalid(
                "compare mode is expanded by the sweep runner".into(),
            ))
        }
    };

    let estimates: Vec<FrequencyPoint> = peaks
        .iter()
        .map(|(cell, _)| dict.spec.location(cell))
        .collect();
    let amplitudes = if estimates.is_empty() {
        Vec::new()
    } else {
        refit_amplitudes(&dict.op, &band, &estimates, &y)
            .map(|(a, _)| a)
            .unwrap_or_else(|_| peaks.iter().map(|(_, a)| *a).collect())
    };
    let truth_locs = mixture.locations();
    let err = resolution_error(&truth_locs, &estimates, &sc.weights());
    let support_exact = {
        let mut got: Vec<Vec<usize>> = peaks.iter().map(|(c, _)| c.clone()).collect();
        let mut want: Vec<Vec<usize>> = truth_locs
            .iter()
            .map(|p| {
                (0..band.dim())
                    .map(|a| {
                        (p.coord(a) * grid_sizes[a] as f64).round() as usize % grid_sizes[a]
                    })
                    .collect()
            })
            .collect();
        got.sort();
        want.sort();
        // only meaningful when the truth lies on the grid
        let on_grid = truth_locs.iter().all(|p| {
            (0..band.dim()).all(|a| {
                let snapped = (p.coord(a) * grid_sizes[a] as f64).round()
                    / grid_sizes[a] as f64;
                wrap_distance(snapped, p.coord(a)) < 1e-9
            })
        });
        on_grid && got == want
    };
    Ok(TrialDetail {
        outcome: TrialOutcome {
            trial,
            srf,
            snr_db,
            method: tag,
            resolution_error: err,
            support_exact,
            converged,
            iterations,
            seconds: start.elapsed().as_secs_f64(),
        },
        truth: mixture,
        estimates,
        amplitudes,
        solution,
    })
}
