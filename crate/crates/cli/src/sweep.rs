//! Monte Carlo sweeps over (SRF, SNR) cells with deterministic per-trial
//! substreams, CSV persistence, and plot-ready series.

use crate::config::{Method, Scenario};
use crate::scenario::{run_trial, TrialOutcome};
use linespec_core::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellAggregate {
    pub method: String,
    pub srf: usize,
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub mean_resolution_error: f64,
    pub success_rate: f64,
    pub converged: usize,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub scenario: Scenario,
    pub records: Vec<TrialOutcome>,
    pub aggregates: Vec<CellAggregate>,
}

fn expand_methods(m: Method) -> Vec<Method> {
    match m {
        Method::Compare => vec![Method::L1Err, Method::Iaa],
        other => vec![other],
    }
}

/// Run every (method, srf, snr, trial) cell. Trials execute in parallel;
/// the result order is canonical so repeated runs are byte-identical.
pub fn run_sweep(sc: &Scenario) -> Result<SweepResult> {
    let methods = expand_methods(sc.method);
    let mut jobs = Vec::new();
    for &method in &methods {
        for &srf in &sc.srf {
            for &snr in &sc.snr_db {
                for trial in 0..sc.trials as u64 {
                    jobs.push((method, srf, snr, trial));
                }
            }
        }
    }
    let outcomes: Vec<Result<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(method, srf, snr, trial)| {
            run_trial(sc, trial, srf, snr, method).map(|d| d.outcome)
        })
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        records.push(o?);
    }
    records.sort_by(|a, b| {
        (a.method, a.srf, snr_key(a.snr_db), a.trial).partial_cmp(&(
            b.method,
            b.srf,
            snr_key(b.snr_db),
            b.trial,
        ))
        .expect("keys are comparable")
    });
    let aggregates = aggregate(&records);
    Ok(SweepResult {
        scenario: sc.clone(),
        records,
        aggregates,
    })
}

fn snr_key(s: Option<f64>) -> f64 {
    s.unwrap_or(f64::MAX)
}

pub fn snr_label(s: Option<f64>) -> String {
    match s {
        None => "inf".into(),
        Some(v) => {
            if v == v.trunc() {
                format!("{}", v as i64)
            } else {
                format!("{v}")
            }
        }
    }
}

fn aggregate(records: &[TrialOutcome]) -> Vec<CellAggregate> {
    let mut cells: BTreeMap<(String, usize, i64), Vec<&TrialOutcome>> = BTreeMap::new();
    for r in records {
        let key = (
            r.method.to_string(),
            r.srf,
            (snr_key(r.snr_db) * 1000.0) as i64,
        );
        cells.entry(key).or_default().push(r);
    }
    cells
        .into_values()
        .map(|rs| {
            let n = rs.len();
            CellAggregate {
                method: rs[0].method.to_string(),
                srf: rs[0].srf,
                snr_db: rs[0].snr_db,
                trials: n,
                mean_resolution_error: rs.iter().map(|r| r.resolution_error).sum::<f64>()
                    / n as f64,
                success_rate: rs.iter().filter(|r| r.support_exact).count() as f64 / n as f64,
                converged: rs.iter().filter(|r| r.converged).count(),
                mean_seconds: rs.iter().map(|r| r.seconds).sum::<f64>() / n as f64,
            }
        })
        .collect()
}

impl SweepResult {
    pub fn aggregate_for(
        &self,
        method: &str,
        srf: usize,
        snr_db: Option<f64>,
    ) -> Option<&CellAggregate> {
        self.aggregates.iter().find(|a| {
            a.method == method
                && a.srf == srf
                && (a.snr_db == snr_db
                    || (a.snr_db.is_none() && snr_db.is_none()))
        })
    }

    /// Write trials.csv / aggregate.csv / run.json / plotdata series.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let methods: Vec<String> = {
            let mut m: Vec<String> = self
                .records
                .iter()
                .map(|r| r.method.to_string())
                .collect();
            m.sort();
            m.dedup();
            m
        };
        let multi_method = methods.len() > 1;
        for method in &methods {
            let suffix = if multi_method {
                format!("_{method}")
            } else {
                String::new()
            };
            let trial_path = out_dir.join(format!("trials{suffix}.csv"));
            let mut w = csv::Writer::from_path(&trial_path).map_err(csv_err)?;
            w.write_record(["srf", "snr_db", "trial", "resolution_error", "converged", "seconds"])
                .map_err(csv_err)?;
            for r in self.records.iter().filter(|r| r.method == *method) {
                w.write_record([
                    r.srf.to_string(),
                    snr_label(r.snr_db),
                    r.trial.to_string(),
                    format!("{:.12e}", r.resolution_error),
                    (r.converged as u8).to_string(),
                    format!("{:.6}", r.seconds),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;

            let agg_path = out_dir.join(format!("aggregate{suffix}.csv"));
            let mut w = csv::Writer::from_path(&agg_path).map_err(csv_err)?;
            w.write_record([
                "srf",
                "snr_db",
                "trials",
                "mean_resolution_error",
                "success_rate",
                "converged",
                "mean_seconds",
            ])
            .map_err(csv_err)?;
            for a in self.aggregates.iter().filter(|a| a.method == *method) {
                w.write_record([
                    a.srf.to_string(),
                    snr_label(a.snr_db),
                    a.trials.to_string(),
                    format!("{:.12e}", a.mean_resolution_error),
                    format!("{:.4}", a.success_rate),
                    a.converged.to_string(),
                    format!("{:.6}", a.mean_seconds),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
        let meta = serde_json::to_vec_pretty(&serde_json::json!({
            "schema_version": 1,
            "scenario": self.scenario,
        }))?;
        std::fs::write(out_dir.join("run.json"), meta)?;
        self.write_plotdata(&out_dir.join("plotdata"))?;
        Ok(())
    }

    /// Two-column x-y series: error vs SRF per SNR level, and error vs
    /// SNR per method when the sweep is an SNR comparison.
    fn write_plotdata(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut methods: Vec<String> = self.aggregates.iter().map(|a| a.method.clone()).collect();
        methods.sort();
        methods.dedup();
        for method in &methods {
            let mut snrs: Vec<Option<f64>> = self
                .aggregates
                .iter()
                .filter(|a| &a.method == method)
                .map(|a| a.snr_db)
                .collect();
            snrs.sort_by(|a, b| snr_key(*a).partial_cmp(&snr_key(*b)).unwrap());
            snrs.dedup();
            if self.scenario.srf.len() > 1 {
                for &snr in &snrs {
                    let path =
                        dir.join(format!("error_vs_srf_{}_snr{}.dat", method, snr_label(snr)));
                    let mut f = std::fs::File::create(path)?;
                    for a in self
                        .aggregates
                        .iter()
                        .filter(|a| &a.method == method && a.snr_db == snr)
                    {
                        writeln!(f, "{} {:.12e}", a.srf, a.mean_resolution_error)?;
                    }
                }
            }
            if snrs.len() > 1 {
                for &srf in &self.scenario.srf {
                    let path = dir.join(format!("error_vs_snr_{}_srf{}.dat", method, srf));
                    let mut f = std::fs::File::create(path)?;
                    for a in self
                        .aggregates
                        .iter()
                        .filter(|a| &a.method == method && a.srf == srf && a.snr_db.is_some())
                    {
                        writeln!(
                            f,
                            "{} {:.12e}",
                            a.snr_db.expect("filtered"),
                            a.mean_resolution_error
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv write failed: {e}"))
}
