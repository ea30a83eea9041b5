//! Output files of a single estimation run.

use std::path::Path;

use serde::Serialize;

use crate::em::EmOutcome;
use crate::error::Result;
use crate::io::{csv_string, format_value, write_file, write_json};
use crate::metrics::FitReport;
use crate::sampler::SamplerMode;
use crate::scalar::Scalar;

/// Everything `fit` writes to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FitRunReport<'a, T> {
    pub mode: SamplerMode,
    pub seed: u64,
    pub report: &'a FitReport,
    pub outcome: &'a EmOutcome<T>,
}

/// `parameter,value` rows for the final estimate.
pub fn estimate_csv<T: Scalar>(outcome: &EmOutcome<T>) -> Result<String> {
    let p = &outcome.params;
    let mut rows = Vec::new();
    for i in 0..p.n_metabolites() {
        rows.push(vec![format!("rho_{}", i + 1), format_value(p.rho[i])]);
        rows.push(vec![format!("mu_{}", i + 1), format_value(p.mu[i])]);
    }
    rows.push(vec!["alpha".into(), format_value(p.alpha)]);
    rows.push(vec!["sigma_e".into(), format_value(outcome.sigma_e)]);
    csv_string(&["parameter", "value"], &rows)
}

/// One row per EM iteration: timing, noise, acceptance, fit and hyperparameters.
pub fn trace_csv<T: Scalar>(outcome: &EmOutcome<T>) -> Result<String> {
    let m = outcome.params.n_metabolites();
    let mut header: Vec<String> = [
        "iteration",
        "elapsed_seconds",
        "sigma_e",
        "acceptance_rate",
        "fit_w",
        "alpha",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for prefix in ["rho", "mu", "beta_rho", "sigma_rho", "beta_mu", "sigma_mu"] {
        header.extend((1..=m).map(|i| format!("{prefix}_{i}")));
    }
    let rows: Vec<Vec<String>> = outcome
        .trace
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.iteration.to_string(),
                format_value(r.elapsed_seconds),
                format_value(r.sigma_e),
                format_value(r.acceptance_rate),
                r.fit_w.map_or_else(|| "NaN".to_string(), format_value),
                format_value(r.params.alpha),
            ];
            for v in [
                &r.params.rho,
                &r.params.mu,
                &r.hyper.beta_rho,
                &r.hyper.sigma_rho,
                &r.hyper.beta_mu,
                &r.hyper.sigma_mu,
            ] {
                row.extend(v.iter().map(|&x| format_value(x)));
            }
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_string(&header_refs, &rows)
}

/// Writes `report.json`, `estimate.csv` and `trace.csv` into `dir`.
pub fn write_fit_outputs<T: Scalar>(
    dir: &Path,
    mode: SamplerMode,
    seed: u64,
    outcome: &EmOutcome<T>,
    report: &FitReport,
) -> Result<()> {
    write_json(
        &dir.join("report.json"),
        &FitRunReport {
            mode,
            seed,
            report,
            outcome,
        },
    )?;
    write_file(&dir.join("estimate.csv"), estimate_csv(outcome)?.as_bytes())?;
    write_file(&dir.join("trace.csv"), trace_csv(outcome)?.as_bytes())
}
