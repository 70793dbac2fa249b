//! Experiment configuration: a flat key = value text format, built-in
//! presets, and the scenario type consumed by the sweep runner.

use linespec_core::iaa::IaaConfig;
use linespec_core::solver::SolverConfig;
use linespec_core::spectral::Bandwidth;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    SubsampledIdentity,
    SubsampledFourier,
    TimeSamples,
    Gaussian,
    Sors,
    Gabor,
    Mimo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    L1Eq,
    L1Err,
    Iaa,
    /// Run both the convex program and the baseline per trial.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneMode {
    /// Locations uniform in the per-coordinate box, amplitude mode as set.
    OffGridBox,
    /// Locations snapped to the SRF=1 grid with pairwise separation.
    OnGridSeparated,
    /// The aligned coarse-grid scene (k/(N_T N_R), k/L, k/L).
    CoarseDiagonal,
    /// Random distinct coarse-grid cells, distinct in every coordinate.
    CoarseRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmpMode {
    UnitCircle,
    UnitDisc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub ensemble: EnsembleKind,
    pub dim: usize,
    /// Half-bandwidth N (tau/nu axes for the MIMO model).
    pub n: usize,
    pub n_t: usize,
    pub n_r: usize,
    /// Measurement rows for the row-drawn ensembles; the radar ensembles
    /// fix their own row counts.
    pub m: usize,
    pub s: usize,
    pub srf: Vec<usize>,
    /// None entries mean noiseless.
    pub snr_db: Vec<Option<f64>>,
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    pub scene: SceneMode,
    pub amp: AmpMode,
    /// Per-coordinate upper box bounds for off-grid scenes.
    pub box_max: Option<Vec<f64>>,
    /// Pairwise wrap separation enforced by rejection in on-grid scenes.
    pub separation: Option<f64>,
    /// Multiplier on the noise-calibrated l2 ball radius.
    pub eta_scale: f64,
    pub solver: SolverConfig,
    pub iaa: IaaConfig,
    pub min_magnitude_fraction: f64,
    pub merge_radius_cells: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            ensemble: EnsembleKind::SubsampledIdentity,
            dim: 1,
            n: 32,
            n_t: 3,
            n_r: 3,
            m: 40,
            s: 3,
            srf: vec![1],
            snr_db: vec![None],
            trials: 10,
            seed: 1,
            method: Method::L1Err,
            scene: SceneMode::OnGridSeparated,
            amp: AmpMode::UnitCircle,
            box_max: None,
            separation: None,
            eta_scale: 1.0,
            solver: SolverConfig::default(),
            iaa: IaaConfig::default(),
            min_magnitude_fraction: 0.05,
            merge_radius_cells: 1,
        }
    }
}

impl Scenario {
    pub fn l(&self) -> usize {
        2 * self.n + 1
    }

    /// Signal geometry: anisotropic for the MIMO model.
    pub fn band(&self) -> Bandwidth {
        match self.ensemble {
            EnsembleKind::Mimo => {
                Bandwidth::new(vec![(self.n_t * self.n_r - 1) / 2, self.n, self.n])
                    .expect("validated antenna counts")
            }
            EnsembleKind::Gabor => Bandwidth::isotropic(2, self.n).expect("dim 2"),
            _ => Bandwidth::isotropic(self.dim, self.n).expect("dim <= 3"),
        }
    }

    /// Base (SRF = 1) grid sizes.
    pub fn base_grid(&self) -> Vec<usize> {
        match self.ensemble {
            EnsembleKind::Mimo => vec![self.n_t * self.n_r, self.l(), self.l()],
            EnsembleKind::Gabor => vec![self.l(), self.l()],
            _ => vec![self.l(); self.dim],
        }
    }

    /// Resolution-error weights, one per coordinate.
    pub fn weights(&self) -> Vec<f64> {
        self.base_grid().iter().map(|&b| b as f64).collect()
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_pairs(text: &str) -> Result<HashMap<String, String>, ConfigError> {
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_list<T: std::str::FromStr>(v: &str, key: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| ConfigError(format!("bad entry {:?} in {key}", p.trim())))
        })
        .collect()
}

fn parse_snr_list(v: &str) -> Result<Vec<Option<f64>>, ConfigError> {
    v.split(',')
        .map(|p| {
            let p = p.trim();
            if p.eq_ignore_ascii_case("inf") || p.eq_ignore_ascii_case("noiseless") {
                Ok(None)
            } else {
                p.parse::<f64>()
                    .map(Some)
                    .map_err(|_| ConfigError(format!("bad snr entry {p:?}")))
            }
        })
        .collect()
}

/// Apply key = value overrides onto a scenario. Unknown keys are errors.
pub fn apply_overrides(base: &mut Scenario, text: &str) -> Result<(), ConfigError> {
    let map = parse_pairs(text)?;
    for (k, v) in map {
        match k.as_str() {
            "name" => base.name = v,
            "ensemble" => {
                base.ensemble = match v.as_str() {
                    "subsampled-identity" => EnsembleKind::SubsampledIdentity,
                    "subsampled-fourier" => EnsembleKind::SubsampledFourier,
                    "time-samples" => EnsembleKind::TimeSamples,
                    "gaussian" => EnsembleKind::Gaussian,
                    "sors" => EnsembleKind::Sors,
                    "gabor" => EnsembleKind::Gabor,
                    "mimo" => EnsembleKind::Mimo,
                    other => return Err(ConfigError(format!("unknown ensemble {other:?}"))),
                }
            }
            "dim" => base.dim = parse_num(&v, &k)?,
            "n" => base.n = parse_num(&v, &k)?,
            "n_t" => base.n_t = parse_num(&v, &k)?,
            "n_r" => base.n_r = parse_num(&v, &k)?,
            "m" => base.m = parse_num(&v, &k)?,
            "s" => base.s = parse_num(&v, &k)?,
            "srf" => base.srf = parse_list(&v, &k)?,
            "snr_db" => base.snr_db = parse_snr_list(&v)?,
            "trials" => base.trials = parse_num(&v, &k)?,
            "seed" => base.seed = parse_num(&v, &k)?,
            "method" => {
                base.method = match v.as_str() {
                    "l1" | "l1eq" => Method::L1Eq,
                    "l1err" => Method::L1Err,
                    "iaa" => Method::Iaa,
                    "compare" => Method::Compare,
                    other => return Err(ConfigError(format!("unknown method {other:?}"))),
                }
            }
            "scene" => {
                base.scene = match v.as_str() {
                    "off-grid-box" => SceneMode::OffGridBox,
                    "on-grid-separated" => SceneMode::OnGridSeparated,
                    "coarse-diagonal" => SceneMode::CoarseDiagonal,
                    "coarse-random" => SceneMode::CoarseRandom,
                    other => return Err(ConfigError(format!("unknown scene mode {other:?}"))),
                }
            }
            "amp" => {
                base.amp = match v.as_str() {
                    "unit-circle" => AmpMode::UnitCircle,
                    "unit-disc" => AmpMode::UnitDisc,
                    other => return Err(ConfigError(format!("unknown amp mode {other:?}"))),
                }
            }
            "box" => base.box_max = Some(parse_list(&v, &k)?),
            "separation" => base.separation = Some(parse_num(&v, &k)?),
            "eta_scale" => base.eta_scale = parse_num(&v, &k)?,
            "tol_rel" => base.solver.tol_rel = parse_num(&v, &k)?,
            "tol_abs" => base.solver.tol_abs = parse_num(&v, &k)?,
            "max_iter" => base.solver.max_iter = parse_num(&v, &k)?,
            "rho_scale" => base.solver.rho_scale = parse_num(&v, &k)?,
            "iaa_iterations" => base.iaa.iterations = parse_num(&v, &k)?,
            "iaa_loading" => base.iaa.loading = parse_num(&v, &k)?,
            "min_magnitude_fraction" => base.min_magnitude_fraction = parse_num(&v, &k)?,
            "merge_radius_cells" => base.merge_radius_cells = parse_num(&v, &k)?,
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T, ConfigError> {
    v.parse::<T>()
        .map_err(|_| ConfigError(format!("bad value {v:?} for {key}")))
}

/// Built-in scenario presets.
pub fn preset(name: &str) -> Option<Scenario> {
    let mut sc = Scenario::default();
    match name {
        "fig2-mini" => {
            sc.name = name.into();
            sc.ensemble = EnsembleKind::Mimo;
            sc.dim = 3;
            sc.n = 20;
            sc.n_t = 3;
            sc.n_r = 3;
            sc.s = 5;
            sc.srf = vec![1, 2, 3, 4, 5, 6];
            sc.snr_db = vec![None, Some(20.0)];
            sc.trials = 10;
            sc.method = Method::L1Err;
            sc.scene = SceneMode::OffGridBox;
            sc.amp = AmpMode::UnitDisc;
            sc.solver.tol_rel = 1e-6;
            sc.solver.max_iter = 300;
        }
        "fig2-full" => {
            sc = preset("fig2-mini").expect("base preset exists");
            sc.name = name.into();
            sc.snr_db = vec![None, Some(5.0), Some(10.0), Some(20.0)];
            sc.trials = 100;
            sc.solver.max_iter = 600;
        }
        "fig3" => {
            sc.name = name.into();
            sc.ensemble = EnsembleKind::Mimo;
            sc.dim = 3;
            sc.n = 20;
            sc.n_t = 3;
            sc.n_r = 3;
            sc.s = 5;
            sc.srf = vec![3];
            sc.snr_db = vec![Some(10.0), Some(5.0), Some(0.0)];
            sc.trials = 100;
            sc.method = Method::Compare;
            sc.scene = SceneMode::CoarseDiagonal;
            sc.amp = AmpMode::UnitDisc;
            sc.solver.tol_rel = 1e-6;
            sc.solver.max_iter = 500;
        }
        "gauss-thm2" => {
            sc.name = name.into();
            sc.ensemble = EnsembleKind::Gaussian;
            sc.dim = 1;
            sc.n = 64;
            sc.s = 4;
            // ceil(8 S ln L) rows
            sc.m = (8.0 * 4.0 * (129.0f64).ln()).ceil() as usize;
            sc.srf = vec![1];
            sc.snr_db = vec![None];
            sc.trials = 50;
            sc.method = Method::L1Eq;
            sc.scene = SceneMode::OnGridSeparated;
            sc.amp = AmpMode::UnitCircle;
            sc.separation = Some(2.0 / 64.0);
        }
        "recovery-1d" => {
            sc.name = name.into();
            sc.ensemble = EnsembleKind::SubsampledIdentity;
            sc.dim = 1;
            sc.n = 32;
            sc.m = 40;
            sc.s = 3;
            sc.srf = vec![1];
            sc.snr_db = vec![None];
            sc.trials = 50;
            sc.method = Method::L1Eq;
            sc.scene = SceneMode::OnGridSeparated;
            sc.amp = AmpMode::UnitCircle;
            sc.separation = Some(2.0 / 32.0);
        }
        "mimo-recovery" => {
            sc.name = name.into();
            sc.ensemble = EnsembleKind::Mimo;
            sc.dim = 3;
            sc.n = 20;
            sc.n_t = 3;
            sc.n_r = 3;
            sc.s = 5;
            sc.srf = vec![3];
            sc.snr_db = vec![None];
            sc.trials = 25;
            sc.method = Method::L1Eq;
            sc.scene = SceneMode::CoarseRandom;
            sc.amp = AmpMode::UnitCircle;
            sc.solver.tol_rel = 1e-6;
            sc.solver.max_iter = 500;
        }
        _ => return None,
    }
    Some(sc)
}

pub fn load_scenario(
    preset_name: Option<&str>,
    config_path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<Scenario, ConfigError> {
    let mut sc = match preset_name {
        Some(p) => preset(p).ok_or_else(|| ConfigError(format!("unknown preset {p:?}")))?,
        None => Scenario::default(),
    };
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        apply_overrides(&mut sc, &text)?;
    }
    if let Some(seed) = seed_override {
        sc.seed = seed;
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let mut sc = Scenario::default();
        apply_overrides(
            &mut sc,
            "n = 16\nsrf = 1, 2, 3\nsnr_db = inf, 10\nmethod = iaa\n# comment\ntrials=7",
        )
        .unwrap();
        assert_eq!(sc.n, 16);
        assert_eq!(sc.srf, vec![1, 2, 3]);
        assert_eq!(sc.snr_db, vec![None, Some(10.0)]);
        assert_eq!(sc.method, Method::Iaa);
        assert_eq!(sc.trials, 7);
    }

    #[test]
    fn rejects_unknown_keys() {
        let mut sc = Scenario::default();
        assert!(apply_overrides(&mut sc, "nope = 1").is_err());
    }

    #[test]
    fn presets_exist() {
        for name in ["fig2-mini", "fig2-full", "fig3", "gauss-thm2", "recovery-1d", "mimo-recovery"] {
            let sc = preset(name).unwrap();
            assert_eq!(sc.name, name);
        }
        assert!(preset("nonsense").is_none());
    }

    #[test]
    fn mimo_geometry() {
        let sc = preset("fig2-mini").unwrap();
        assert_eq!(sc.l(), 41);
        assert_eq!(sc.band().halves(), &[4, 20, 20]);
        assert_eq!(sc.base_grid(), vec![9, 41, 41]);
        assert_eq!(sc.weights(), vec![9.0, 41.0, 41.0]);
    }
}
