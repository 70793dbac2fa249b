use clap::{Parser, Subcommand};
use linespec_cli::commands::{self, CertifyRequest};
use linespec_cli::config::{self, ConfigError, EnsembleKind, Method, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

/// Generalized line spectral estimation: simulate, recover, certify, and
/// reproduce the benchmark experiments.
#[derive(Parser)]
#[command(name = "linespec", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a scene and operator, measure, and write the files.
    Simulate {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Signal-to-noise ratio in dB; omit for noiseless.
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run one recovery instance end to end.
    Recover {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 1)]
        srf: usize,
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Exit with code 3 if the solver did not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Build and verify a dual certificate.
    Certify {
        /// Built-in request: certify-3d.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Support points: comma-separated coordinates, points split by
        /// semicolons (e.g. "0.1,0.2,0.3;0.5,0.6,0.7").
        #[arg(long, default_value = "0.1,0.3", allow_hyphen_values = true)]
        support: String,
        /// Draw random unit-circle signs from this seed (all-ones
        /// otherwise).
        #[arg(long)]
        sign_seed: Option<u64>,
        /// Constrain the certificate to an ensemble's row space.
        #[arg(long)]
        ensemble: Option<String>,
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        operator_seed: u64,
        #[arg(long, default_value_t = 64)]
        grid_per_l: usize,
        /// Near-region radius in units of 1/N.
        #[arg(long, default_value_t = 0.2447)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reproduce the benchmark sweeps.
    Sweep {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// csv (default) or json trial records.
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        strict: bool,
    },
    /// Run the iterative adaptive baseline on a scenario.
    Baseline {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Coherence and isotropy diagnostics for an ensemble.
    Diagnose {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_support(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
    if dim == 1 {
        // commas separate points in one dimension
        return text
            .split([',', ';'])
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map(|v| vec![v])
                    .map_err(|_| ConfigError(format!("bad coordinate {c:?}")))
            })
            .collect();
    }
    text.split(';')
        .map(|pt| {
            pt.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError(format!("bad coordinate {c:?}")))
                })
                .collect()
        })
        .collect()
}

fn scenario_from(
    preset: Option<&str>,
    config_path: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<Scenario, ConfigError> {
    config::load_scenario(preset, config_path.map(|p| p.as_path()), seed)
}

fn run() -> Result<(), MainError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            preset,
            config,
            seed,
            trial,
            snr_db,
            out_dir,
        } => {
            let sc = scenario_from(preset.as_deref(), config.as_ref(), seed)?;
            commands::simulate(&sc, trial, snr_db, &out_dir)?;
            println!(
                "wrote scene, operator, and measurements to {}",
                out_dir.display()
            );
            Ok(())
        }
        Command::Recover {
            preset,
            config,
            seed,
            trial,
            srf,
            snr_db,
            out_dir,
            strict,
        } => {
            let sc = scenario_from(preset.as_deref(), config.as_ref(), seed)?;
            let out = commands::recover(&sc, trial, srf, snr_db, &out_dir)?;
            println!(
                "method {}  resolution error {:.6}  converged {}  ({} iterations)",
                out.method, out.resolution_error, out.converged, out.iterations
            );
            if strict && !out.converged {
                return Err(MainError::NonConvergence);
            }
            Ok(())
        }
        Command::Certify {
            preset,
            dim,
            n,
            support,
            sign_seed,
            ensemble,
            m,
            operator_seed,
            grid_per_l,
            radius,
            out,
            strict,
            seed,
        } => {
            let req = match preset.as_deref() {
                Some("certify-3d") => commands::certify_3d_request(seed.unwrap_or(1)),
                Some(other) => {
                    return Err(ConfigError(format!("unknown certify preset {other:?}")).into())
                }
                None => {
                    let support = parse_support(&support, dim)?;
                    if support.iter().any(|p| p.len() != dim) {
                        return Err(ConfigError(format!(
                            "support points must have {dim} coordinates"
                        ))
                        .into());
                    }
                    let ensemble = match ensemble.as_deref() {
                        None => None,
                        Some("subsampled-identity") => Some(EnsembleKind::SubsampledIdentity),
                        Some("gaussian") => Some(EnsembleKind::Gaussian),
                        Some("time-samples") => Some(EnsembleKind::TimeSamples),
                        Some(other) => {
                            return Err(ConfigError(format!(
                                "unsupported certificate ensemble {other:?}"
                            ))
                            .into())
                        }
                    };
                    CertifyRequest {
                        dim,
                        n,
                        support,
                        sign_seed,
                        ensemble,
                        m,
                        operator_seed,
                        exclusion_radius_over_n: radius,
                        grid_per_l,
                        near_samples: 3,
                    }
                }
            };
            let out_path = out.unwrap_or_else(|| PathBuf::from("certificate.json"));
            let result = commands::certify(&req, Some(&out_path))?;
            let bound = result
                .record
                .bound
                .as_ref()
                .map(|b| b.certified_sup)
                .unwrap_or(f64::NAN);
            println!(
                "certified: {}  sup bound {:.6}  written to {}",
                result.certified,
                bound,
                out_path.display()
            );
            if strict && !result.certified {
                return Err(MainError::NonConvergence);
            }
            Ok(())
        }
        Command::Sweep {
            preset,
            config,
            seed,
            out_dir,
            format,
            strict,
        } => {
            if format != "csv" && format != "json" {
                return Err(ConfigError(format!("unknown format {format:?}")).into());
            }
            let sc = scenario_from(preset.as_deref(), config.as_ref(), seed)?;
            if format == "json" {
                let result = linespec_cli::sweep::run_sweep(&sc)?;
                result.write(&out_dir)?;
                std::fs::write(
                    out_dir.join("trials.json"),
                    serde_json::to_vec_pretty(&result.records)
                        .map_err(linespec_core::Error::from)?,
                )
                .map_err(linespec_core::Error::from)?;
                if strict && result.records.iter().any(|r| !r.converged) {
                    return Err(MainError::NonConvergence);
                }
            } else {
                commands::sweep_to_dir(&sc, &out_dir, strict).map_err(|e| match e {
                    linespec_core::Error::Invalid(msg) if msg.contains("did not converge") => {
                        MainError::NonConvergence
                    }
                    other => other.into(),
                })?;
            }
            Ok(())
        }
        Command::Baseline {
            preset,
            config,
            seed,
            out_dir,
            strict,
        } => {
            let mut sc = scenario_from(preset.as_deref(), config.as_ref(), seed)?;
            sc.method = Method::Iaa;
            commands::sweep_to_dir(&sc, &out_dir, strict)?;
            Ok(())
        }
        Command::Diagnose {
            preset,
            config,
            seed,
            out,
        } => {
            let sc = scenario_from(preset.as_deref(), config.as_ref(), seed)?;
            let op = linespec_cli::scenario::build_operator(&sc, 0)?;
            let report = commands::diagnose(&op, out.as_deref())?;
            println!(
                "ensemble {}  mu_hat {:.4}  isotropy residual {:.3e}  adjoint residual {:.3e}",
                report.coherence.ensemble,
                report.coherence.mu_hat,
                report.coherence.isotropy_residual,
                report.adjoint_residual
            );
            Ok(())
        }
    }
}

#[derive(Debug)]
enum MainError {
    Config(String),
    NonConvergence,
    Other(linespec_core::Error),
}

impl From<ConfigError> for MainError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.0)
    }
}

impl From<linespec_core::Error> for MainError {
    fn from(e: linespec_core::Error) -> Self {
        Self::Other(e)
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(MainError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(MainError::NonConvergence) => {
            eprintln!("did not converge / certify in strict mode");
            ExitCode::from(3)
        }
        Err(MainError::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
