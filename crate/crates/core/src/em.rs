//! Monte-Carlo expectation-maximization of the prior hyperparameters.
//!
//! Each iteration samples the posterior of the kinetic constants under the
//! current priors, refits the log-Gaussian priors to the retained samples by
//! moment matching, takes the posterior mean as the point estimate, and
//! re-estimates the noise level from its residuals.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::fit_rate;
use crate::model::{alpha_mle, predictions, Dataset, KineticParams, ParamKind, ParamSlot};
use crate::priors::{init_hyperparams, init_params, HyperParams};
use crate::sampler::{gibbs_order, log_autocorrelation, ChainState, Sampler, SamplerConfig};
use crate::scalar::Scalar;

/// Floor applied to every estimated standard deviation (noise and prior).
pub const SIGMA_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Number of EM iterations `M`.
    pub iterations: usize,
    pub sampler: SamplerConfig,
    /// Apply `sampler.burnin` only in the first iteration; later chains
    /// continue from the previous iteration's last sample.
    pub burnin_first_only: bool,
    /// Stop once no hyperparameter moves by more than this amount.
    pub early_stop_tol: Option<f64>,
    /// Constants fixed at a known value (zero for an absent effect). They are
    /// neither sampled nor given updated priors.
    #[serde(default)]
    pub known: Vec<KnownValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownValue {
    pub slot: ParamSlot,
    pub value: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            sampler: SamplerConfig::default(),
            burnin_first_only: true,
            early_stop_tol: None,
            known: Vec::new(),
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("at least one EM iteration is required".into()));
        }
        if self.sampler.samples < 2 {
            return Err(Error::Config(
                "the hyperparameter update needs at least 2 retained Gibbs samples".into(),
            ));
        }
        if let Some(tol) = self.early_stop_tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::Config(format!(
                    "early-stop tolerance {tol} must be non-negative"
                )));
            }
        }
        for k in &self.known {
            if !(k.value.is_finite() && k.value >= 0.0) {
                return Err(Error::Config(format!(
                    "known value {} = {} must be a non-negative real",
                    k.slot, k.value
                )));
            }
        }
        self.sampler.validate()
    }

    /// Slots the sampler must skip: explicitly frozen ones plus known values.
    fn held_slots(&self) -> Vec<ParamSlot> {
        let mut held = self.sampler.frozen.clone();
        held.extend(
            self.known
                .iter()
                .map(|k| k.slot)
                .filter(|s| !self.sampler.frozen.contains(s)),
        );
        held
    }
}

fn log_moments<T: Scalar>(samples: &[KineticParams<T>], slot: ParamSlot) -> (T, T) {
    let n = T::lit(samples.len() as f64);
    let mean = samples.iter().map(|p| p.get(slot).ln()).sum::<T>() / n;
    let var = samples
        .iter()
        .map(|p| {
            let d = p.get(slot).ln() - mean;
            d * d
        })
        .sum::<T>()
        / n;
    (mean, var.sqrt().max(T::lit(SIGMA_MIN)))
}

fn check_sample_count<T>(samples: &[KineticParams<T>]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::Config(format!(
            "hyperparameter update needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    Ok(())
}

/// Hyperparameter update from retained samples: mean and population standard
/// deviation of the log-samples, the latter floored at [`SIGMA_MIN`].
pub fn q_step<T: Scalar>(samples: &[KineticParams<T>]) -> Result<HyperParams<T>> {
    check_sample_count(samples)?;
    let m = samples[0].n_metabolites();
    let mut h = HyperParams {
        beta_rho: Vec::with_capacity(m),
        sigma_rho: Vec::with_capacity(m),
        beta_mu: Vec::with_capacity(m),
        sigma_mu: Vec::with_capacity(m),
    };
    for i in 0..m {
        let (b, s) = log_moments(samples, ParamSlot::rho(i));
        h.beta_rho.push(b);
        h.sigma_rho.push(s);
        let (b, s) = log_moments(samples, ParamSlot::mu(i));
        h.beta_mu.push(b);
        h.sigma_mu.push(s);
    }
    h.validate()
        .map_err(|e| Error::Numerical(format!("hyperparameter update failed: {e}")))?;
    Ok(h)
}

/// [`q_step`] that leaves the priors of the `held` slots at their `previous` values.
pub fn q_step_partial<T: Scalar>(
    samples: &[KineticParams<T>],
    previous: &HyperParams<T>,
    held: &[ParamSlot],
) -> Result<HyperParams<T>> {
    check_sample_count(samples)?;
    let mut h = previous.clone();
    for slot in gibbs_order(previous.n_metabolites()).filter(|s| !held.contains(s)) {
        let (b, s) = log_moments(samples, slot);
        let i = slot.metabolite;
        match slot.kind {
            ParamKind::Rho => (h.beta_rho[i], h.sigma_rho[i]) = (b, s),
            ParamKind::Mu => (h.beta_mu[i], h.sigma_mu[i]) = (b, s),
        }
    }
    h.validate()
        .map_err(|e| Error::Numerical(format!("hyperparameter update failed: {e}")))?;
    Ok(h)
}

/// Posterior-mean kinetic constants with `alpha` refitted at that mean.
pub fn posterior_mean<T: Scalar>(samples: &[KineticParams<T>], data: &Dataset<T>) -> Result<KineticParams<T>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Config("posterior mean needs at least one sample".into()))?;
    let m = first.n_metabolites();
    let n = T::lit(samples.len() as f64);
    let rho: Vec<T> = (0..m)
        .map(|i| samples.iter().map(|p| p.rho[i]).sum::<T>() / n)
        .collect();
    let mu: Vec<T> = (0..m).map(|i| samples.iter().map(|p| p.mu[i]).sum::<T>() / n).collect();
    let alpha = alpha_mle(data, &rho, &mu)?.alpha;
    KineticParams::new(rho, mu, alpha)
}

/// Root-mean-square residual, floored at [`SIGMA_MIN`].
pub fn estimate_noise_std<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>) -> Result<T> {
    let ssr: T = predictions(data, params)?
        .into_iter()
        .zip(data.rates())
        .map(|(w, &y)| (y - w) * (y - w))
        .sum();
    Ok((ssr / T::lit(data.len() as f64)).sqrt().max(T::lit(SIGMA_MIN)))
}

/// Snapshot taken at the end of one EM iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord<T> {
    /// 1-based iteration number.
    pub iteration: usize,
    pub hyper: HyperParams<T>,
    pub params: KineticParams<T>,
    pub sigma_e: T,
    /// Fraction of accepted proposals during this iteration's chain.
    pub acceptance_rate: f64,
    /// Acceptance fraction per parameter, in Gibbs order.
    pub slot_acceptance: Vec<f64>,
    /// Mean lag-1 autocorrelation of the retained log-samples.
    pub mean_lag1_autocorrelation: Option<f64>,
    /// Seconds since the start of the run, monotonic clock.
    pub elapsed_seconds: f64,
    /// Fit in % of the posterior-mean rate; `None` when the rates are constant.
    pub fit_w: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmTrace<T> {
    pub records: Vec<IterationRecord<T>>,
}

impl<T> EmTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord<T>> {
        self.records.last()
    }
}

/// Result of a complete EM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmOutcome<T> {
    pub params: KineticParams<T>,
    pub hyper: HyperParams<T>,
    pub sigma_e: T,
    /// State before the first iteration.
    pub initial_params: KineticParams<T>,
    pub initial_hyper: HyperParams<T>,
    pub initial_sigma_e: T,
    pub trace: EmTrace<T>,
    /// Gibbs cycles executed over the whole run.
    pub gibbs_cycles: usize,
}

fn optional_fit<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>) -> Option<f64> {
    fit_rate(data, params).ok().map(Scalar::as_f64)
}

/// Runs Monte-Carlo EM from the data-driven initialization.
pub fn run_em<T: Scalar, R: Rng + ?Sized>(data: &Dataset<T>, config: &EmConfig, rng: &mut R) -> Result<EmOutcome<T>> {
    config.validate()?;
    let start = Instant::now();

    let initial_hyper = init_hyperparams(data)?;
    let (mut rho0, mut mu0) = init_params(&initial_hyper);
    let m = data.n_metabolites();
    for k in &config.known {
        if k.slot.metabolite >= m {
            return Err(Error::Config(format!("known parameter {} is out of range", k.slot)));
        }
        let i = k.slot.metabolite;
        match k.slot.kind {
            ParamKind::Rho => rho0[i] = T::lit(k.value),
            ParamKind::Mu => mu0[i] = T::lit(k.value),
        }
    }
    let held = config.held_slots();
    let alpha0 = alpha_mle(data, &rho0, &mu0)
        .map_err(|e| Error::Initialization(format!("maximal rate at the prior medians: {e}")))?
        .alpha;
    let initial_params = KineticParams::new(rho0, mu0, alpha0)?;
    let initial_sigma_e = estimate_noise_std(data, &initial_params)?;
    let mut state = ChainState::new(
        data,
        initial_params.rho.clone(),
        initial_params.mu.clone(),
        initial_sigma_e,
    )
    .map_err(|e| Error::Initialization(e.to_string()))?;
    if !state.log_like().is_finite() {
        return Err(Error::Initialization(format!(
            "log-likelihood {} at the initial estimate (alpha = {}, sigma_e = {}) is not finite",
            state.log_like(),
            initial_params.alpha,
            initial_sigma_e
        )));
    }

    let mut hyper = initial_hyper.clone();
    let mut params = initial_params.clone();
    let mut sigma_e = initial_sigma_e;
    let mut trace = EmTrace::default();
    let mut gibbs_cycles = 0;
    let mut chain_config = config.sampler.clone();
    chain_config.frozen = held.clone();

    for iteration in 1..=config.iterations {
        if iteration > 1 && config.burnin_first_only {
            chain_config.burnin = 0;
        }
        state.set_sigma_e(sigma_e, data.len())?;
        state.reset_counts();
        let sampler = Sampler::new(data, &hyper, &chain_config)?;
        let run = sampler.run_chain(state, rng)?;
        gibbs_cycles += run.cycles;

        let next_hyper = q_step_partial(&run.samples, &hyper, &held)?;
        params = posterior_mean(&run.samples, data)?;
        sigma_e = estimate_noise_std(data, &params)?;

        let final_state = run.final_state;
        let slot_acceptance = final_state
            .accept_counts()
            .iter()
            .zip(final_state.attempt_counts())
            .map(|(&a, &n)| if n == 0 { 0.0 } else { a as f64 / n as f64 })
            .collect();
        let autocorr: Vec<f64> = gibbs_order(m)
            .filter(|s| !held.contains(s))
            .filter_map(|s| log_autocorrelation(&run.samples, s, 1))
            .collect();
        let change = hyper.max_abs_diff(&next_hyper);
        hyper = next_hyper;
        trace.records.push(IterationRecord {
            iteration,
            hyper: hyper.clone(),
            params: params.clone(),
            sigma_e,
            acceptance_rate: final_state.acceptance_rate(),
            slot_acceptance,
            mean_lag1_autocorrelation: (!autocorr.is_empty())
                .then(|| autocorr.iter().sum::<f64>() / autocorr.len() as f64),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            fit_w: optional_fit(data, &params),
        });
        state = final_state;

        if let Some(tol) = config.early_stop_tol {
            if change.as_f64() <= tol {
                log::info!("EM stopped after {iteration} iterations: hyperparameter change {change} <= {tol}");
                break;
            }
        }
    }

    Ok(EmOutcome {
        params,
        hyper,
        sigma_e,
        initial_params,
        initial_hyper,
        initial_sigma_e,
        trace,
        gibbs_cycles,
    })
}
