//! Subcommand implementations shared between the binary and the tests.

use crate::config::{EnsembleKind, Method, Scenario};
use crate::metrics::add_noise;
use crate::scenario::{build_operator, generate_scene, run_trial};
use crate::sweep::{run_sweep, snr_label};
use linespec_core::certificate::{
    self, certify_sup_bound, deterministic_certificate, near_region_check, random_certificate,
    CertificateRecord, NearRegionReport,
};
use linespec_core::error::{Error, Result};
use linespec_core::rng::{self, Domain};
use linespec_core::sensing::{adjoint_residual, empirical_coherence, MeasurementOperator};
use linespec_core::spectral::{
    check_separation, random_signs, synthesize, FrequencyPoint, SeparationForm,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub schema_version: u32,
    pub trial: u64,
    pub snr_db: Option<f64>,
    pub y_re: Vec<f64>,
    pub y_im: Vec<f64>,
}

/// simulate: draw the scene and operator for one trial, measure, add
/// noise, and persist everything needed for a later `recover`.
pub fn simulate(sc: &Scenario, trial: u64, snr_db: Option<f64>, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mixture = generate_scene(sc, trial)?;
    let op = build_operator(sc, trial)?;
    let z = synthesize(&mixture);
    let y_clean = if z.len() == op.ambient() {
        op.apply(&z)
    } else {
        let mut padded = vec![Complex64::default(); op.ambient()];
        padded[..z.len()].copy_from_slice(&z);
        op.apply(&padded)
    };
    let snr_index = sc.snr_db.iter().position(|&s| s == snr_db).unwrap_or(0) as u64;
    let noise_seed = rng::derive_seed(sc.seed, Domain::Noise, trial * 64 + snr_index);
    let (y, _) = add_noise(&y_clean, snr_db, noise_seed)?;
    op.save(&out_dir.join("operator.lsop"))?;
    std::fs::write(
        out_dir.join("scene.json"),
        serde_json::to_vec_pretty(&serde_json::json!({
            "schema_version": 1,
            "band": mixture.band,
            "amplitudes_re": mixture.amplitudes().iter().map(|b| b.re).collect::<Vec<_>>(),
            "amplitudes_im": mixture.amplitudes().iter().map(|b| b.im).collect::<Vec<_>>(),
            "locations": mixture.locations().iter().map(|r| r.coords().to_vec()).collect::<Vec<_>>(),
        }))?,
    )?;
    let meas = MeasurementFile {
        schema_version: 1,
        trial,
        snr_db,
        y_re: y.iter().map(|v| v.re).collect(),
        y_im: y.iter().map(|v| v.im).collect(),
    };
    std::fs::write(
        out_dir.join("measurements.json"),
        serde_json::to_vec_pretty(&meas)?,
    )?;
    std::fs::write(
        out_dir.join("scenario.json"),
        serde_json::to_vec_pretty(sc)?,
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RecoverOutput {
    pub schema_version: u32,
    pub method: String,
    pub srf: usize,
    pub converged: bool,
    pub iterations: usize,
    pub resolution_error: f64,
    pub support_exact: bool,
    pub estimates: Vec<Vec<f64>>,
    pub amplitudes_re: Vec<f64>,
    pub amplitudes_im: Vec<f64>,
    pub seconds: f64,
}

/// recover: run one instance end to end and persist the estimates.
pub fn recover(
    sc: &Scenario,
    trial: u64,
    srf: usize,
    snr_db: Option<f64>,
    out_dir: &Path,
) -> Result<RecoverOutput> {
    std::fs::create_dir_all(out_dir)?;
    let method = match sc.method {
        Method::Compare => Method::L1Err,
        m => m,
    };
    let detail = run_trial(sc, trial, srf, snr_db, method)?;
    let out = RecoverOutput {
        schema_version: 1,
        method: detail.outcome.method.to_string(),
        srf,
        converged: detail.outcome.converged,
        iterations: detail.outcome.iterations,
        resolution_error: detail.outcome.resolution_error,
        support_exact: detail.outcome.support_exact,
        estimates: detail
            .estimates
            .iter()
            .map(|r| r.coords().to_vec())
            .collect(),
        amplitudes_re: detail.amplitudes.iter().map(|a| a.re).collect(),
        amplitudes_im: detail.amplitudes.iter().map(|a| a.im).collect(),
        seconds: detail.outcome.seconds,
    };
    std::fs::write(
        out_dir.join("solution.json"),
        serde_json::to_vec_pretty(&out)?,
    )?;
    if let Some(sol) = detail.solution {
        let grid: Vec<usize> = sc.base_grid().iter().map(|b| b * srf).collect();
        let peaks: Vec<(Vec<usize>, Complex64)> = detail
            .estimates
            .iter()
            .zip(&detail.amplitudes)
            .map(|(r, &a)| {
                (
                    (0..grid.len())
                        .map(|ax| (r.coord(ax) * grid[ax] as f64).round() as usize % grid[ax])
                        .collect(),
                    a,
                )
            })
            .collect();
        std::fs::write(
            out_dir.join("coefficients.json"),
            serde_json::to_vec_pretty(&sol.record(&grid, &peaks))?,
        )?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyRequest {
    pub dim: usize,
    pub n: usize,
    pub support: Vec<Vec<f64>>,
    /// Seed for random unit-circle signs; all-ones when absent.
    pub sign_seed: Option<u64>,
    /// Build the operator-constrained certificate for this ensemble.
    pub ensemble: Option<EnsembleKind>,
    pub m: usize,
    pub operator_seed: u64,
    pub exclusion_radius_over_n: f64,
    pub grid_per_l: usize,
    pub near_samples: usize,
}

impl Default for CertifyRequest {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 16,
            support: vec![vec![0.1], vec![0.3]],
            sign_seed: None,
            ensemble: None,
            m: 0,
            operator_seed: 1,
            exclusion_radius_over_n: certificate::DEFAULT_NEAR_RADIUS,
            grid_per_l: 64,
            near_samples: 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CertifyOutput {
    pub record: CertificateRecord,
    pub near_regions: Vec<NearRegionReport>,
    pub certified: bool,
}

/// certify: build the requested certificate, certify the sup bound, and
/// check every near region.
pub fn certify(req: &CertifyRequest, out_path: Option<&Path>) -> Result<CertifyOutput> {
    let support: Vec<FrequencyPoint> = req
        .support
        .iter()
        .map(|c| FrequencyPoint::new(c))
        .collect::<Result<_>>()?;
    let signs: Vec<Complex64> = match req.sign_seed {
        Some(seed) => random_signs(support.len(), seed),
        None => vec![Complex64::new(1.0, 0.0); support.len()],
    };
    let cert = match req.ensemble {
        None => deterministic_certificate(&support, &signs, req.n)?,
        Some(kind) => {
            let mut sc = Scenario {
                ensemble: kind,
                dim: req.dim,
                n: req.n,
                m: req.m,
                seed: req.operator_seed,
                ..Scenario::default()
            };
            sc.s = support.len();
            let op = build_operator(&sc, 0)?;
            random_certificate(&support, &signs, req.n, &op)?
        }
    };
    let radius = req.exclusion_radius_over_n / req.n as f64;
    let l = 2 * req.n + 1;
    let bound = certify_sup_bound(&cert, radius, req.grid_per_l * l)?;
    let near: Vec<NearRegionReport> = (0..support.len())
        .map(|k| near_region_check(&cert, k, radius, req.near_samples))
        .collect::<Result<_>>()?;
    let certified = bound.passes && near.iter().all(|r| r.negative_definite);
    let out = CertifyOutput {
        record: cert.record(Some(bound)),
        near_regions: near,
        certified,
    };
    if let Some(path) = out_path {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, serde_json::to_vec_pretty(&out)?)?;
    }
    Ok(out)
}

/// Random separated support for the 3D certification preset.
pub fn certify_3d_request(seed: u64) -> CertifyRequest {
    let n = 16usize;
    let s = 3usize;
    let threshold = 5.0 / n as f64;
    let mut r = rng::substream(seed, Domain::Scene, 0);
    use rand::Rng;
    let support = loop {
        let pts: Vec<Vec<f64>> = (0..s)
            .map(|_| vec![r.gen::<f64>(), r.gen::<f64>(), r.gen::<f64>()])
            .collect();
        let fp: Vec<FrequencyPoint> = pts
            .iter()
            .map(|c| FrequencyPoint::new(c).expect("dim 3"))
            .collect();
        let rep = check_separation(
            &fp,
            &vec![threshold; 3],
            SeparationForm::MaxAcrossCoordinates,
        )
        .expect("dimensions match");
        if rep.satisfied {
            break pts;
        }
    };
    CertifyRequest {
        dim: 3,
        n,
        support,
        sign_seed: Some(seed ^ 0x5157),
        grid_per_l: 4,
        near_samples: 3,
        ..CertifyRequest::default()
    }
}

#[derive(Debug, Serialize)]
pub struct DiagnoseOutput {
    pub coherence: linespec_core::sensing::CoherenceReport,
    pub adjoint_residual: f64,
    pub isotropy_scale: f64,
}

/// diagnose: coherence, isotropy, and adjoint-consistency report.
pub fn diagnose(op: &MeasurementOperator, out_path: Option<&Path>) -> Result<DiagnoseOutput> {
    let out = DiagnoseOutput {
        coherence: empirical_coherence(op),
        adjoint_residual: adjoint_residual(op, 25, op.seed()),
        isotropy_scale: op.isotropy_scale(),
    };
    if let Some(path) = out_path {
        std::fs::write(path, serde_json::to_vec_pretty(&out)?)?;
    }
    Ok(out)
}

/// sweep/baseline: run the scenario and persist all outputs.
pub fn sweep_to_dir(sc: &Scenario, out_dir: &Path, strict: bool) -> Result<()> {
    let result = run_sweep(sc)?;
    result.write(out_dir)?;
    for a in &result.aggregates {
        println!(
            "method {:>5}  srf {}  snr {:>4}  trials {:>4}  mean error {:.4}  success {:.2}  converged {}/{}",
            a.method,
            a.srf,
            snr_label(a.snr_db),
            a.trials,
            a.mean_resolution_error,
            a.success_rate,
            a.converged,
            a.trials
        );
    }
    if strict {
        let unconverged: usize = result
            .records
            .iter()
            .filter(|r| !r.converged)
            .count();
        if unconverged > 0 {
            return Err(Error::Invalid(format!(
                "{unconverged} trials did not converge"
            )));
        }
    }
    Ok(())
}
