//! Fit criteria for the macroscopic rate and the individual modulation functions.

use serde::{Deserialize, Serialize};

use crate::em::EmTrace;
use crate::error::{Error, Result};
use crate::model::{modulation_unchecked, predictions, Dataset, KineticParams};
use crate::scalar::Scalar;

/// Reports show fits below this value as the value itself.
pub const DISPLAY_FIT_FLOOR: f64 = -1000.0;

/// `100 (1 - ||y - w||_2 / ||y - mean(y)||_2)`.
pub fn fit_rate<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>) -> Result<T> {
    if data.len() < 2 {
        return Err(Error::UndefinedFit("at least two observations are needed"));
    }
    let y = data.rates();
    let mean = y.iter().copied().sum::<T>() / T::lit(y.len() as f64);
    let spread: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if !(spread > T::zero()) {
        return Err(Error::UndefinedFit("observed rates are all equal"));
    }
    let residual: T = predictions(data, params)?
        .into_iter()
        .zip(y)
        .map(|(w, &v)| (v - w) * (v - w))
        .sum();
    Ok(T::lit(100.0) * (T::one() - (residual / spread).sqrt()))
}

/// Scale-corrected fit of one estimated modulation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationFit<T> {
    pub fit: T,
    /// Least-squares scale applied to the estimate.
    pub lambda: T,
}

/// Fit of `lambda * h(c, rho_hat, mu_hat)` against the true values `true_h`,
/// normalized by `||true_h||_2` (not mean-centred, neutral effects are constant).
pub fn fit_modulation<T: Scalar>(
    true_h: &[T],
    rho_hat: T,
    mu_hat: T,
    concentrations: &[T],
) -> Result<ModulationFit<T>> {
    if true_h.len() != concentrations.len() {
        return Err(Error::Domain(format!(
            "{} true values for {} concentrations",
            true_h.len(),
            concentrations.len()
        )));
    }
    let estimate: Vec<T> = concentrations
        .iter()
        .map(|&c| modulation_unchecked(c, rho_hat, mu_hat))
        .collect();
    fit_scaled(true_h, &estimate)
}

/// Fit of `lambda * estimate` against `target` with the least-squares `lambda`.
pub fn fit_scaled<T: Scalar>(target: &[T], estimate: &[T]) -> Result<ModulationFit<T>> {
    let norm_sq: T = target.iter().map(|&h| h * h).sum();
    if !(norm_sq > T::zero()) {
        return Err(Error::UndefinedFit("true modulation values are all zero"));
    }
    let (cross, est_sq) = target
        .iter()
        .zip(estimate)
        .fold((T::zero(), T::zero()), |(a, b), (&h, &e)| (a + h * e, b + e * e));
    if !(est_sq > T::zero()) {
        return Err(Error::DegenerateModel);
    }
    let lambda = cross / est_sq;
    let residual: T = target
        .iter()
        .zip(estimate)
        .map(|(&h, &e)| (h - lambda * e) * (h - lambda * e))
        .sum();
    Ok(ModulationFit {
        fit: T::lit(100.0) * (T::one() - (residual / norm_sq).sqrt()),
        lambda,
    })
}

/// One point of a fit-versus-time curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub elapsed_seconds: f64,
    pub fit_w: f64,
}

/// Fit of each iteration's posterior-mean model against cumulative wall time.
pub fn fit_trajectory<T: Scalar>(trace: &EmTrace<T>, data: &Dataset<T>) -> Result<Vec<TrajectoryPoint>> {
    trace
        .records
        .iter()
        .map(|r| {
            Ok(TrajectoryPoint {
                iteration: r.iteration,
                elapsed_seconds: r.elapsed_seconds,
                fit_w: fit_rate(data, &r.params)?.as_f64(),
            })
        })
        .collect()
}

/// Clamps very negative fits for human-readable output.
pub fn display_fit(fit: f64) -> f64 {
    if fit < DISPLAY_FIT_FLOOR {
        DISPLAY_FIT_FLOOR
    } else {
        fit
    }
}

/// Quality summary of one estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit_w: f64,
    /// Per-metabolite fits; empty when the true kinetics are unknown.
    pub fit_h: Vec<f64>,
    pub lambda: Vec<f64>,
    pub sigma_e: f64,
    pub elapsed_seconds: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl FitReport {
    /// Evaluates an estimate on `data`; `truth` enables the per-metabolite fits.
    pub fn evaluate<T: Scalar>(
        data: &Dataset<T>,
        estimate: &KineticParams<T>,
        sigma_e: T,
        trace: &EmTrace<T>,
        truth: Option<&KineticParams<T>>,
    ) -> Result<Self> {
        let mut fit_h = Vec::new();
        let mut lambda = Vec::new();
        if let Some(truth) = truth {
            for i in 0..data.n_metabolites() {
                let c: Vec<T> = data.column(i).collect();
                let true_h: Vec<T> = c
                    .iter()
                    .map(|&c| modulation_unchecked(c, truth.rho[i], truth.mu[i]))
                    .collect();
                let f = fit_modulation(&true_h, estimate.rho[i], estimate.mu[i], &c)?;
                fit_h.push(f.fit.as_f64());
                lambda.push(f.lambda.as_f64());
            }
        }
        Ok(Self {
            fit_w: fit_rate(data, estimate)?.as_f64(),
            fit_h,
            lambda,
            sigma_e: sigma_e.as_f64(),
            elapsed_seconds: trace.last().map_or(0.0, |r| r.elapsed_seconds),
            trajectory: fit_trajectory(trace, data)?,
        })
    }
}
