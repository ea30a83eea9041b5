//! Metropolis-Hastings within Gibbs sampling of the kinetic constants.
//!
//! Parameters are visited in the fixed order `rho_1, mu_1, ..., rho_m, mu_m`.
//! Each visit draws a log-Gaussian candidate, recomputes the maximal rate in
//! closed form for that candidate, and accepts or rejects the pair jointly.
//! In [`SamplerMode::Enforced`] a rejected visit is retried with fresh
//! candidates, up to `k_max` attempts, before the old value is kept.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    alpha_from_products, gaussian_log_likelihood, guarded_product, log_likelihood, modulation_unchecked, Dataset,
    KineticParams, ParamSlot,
};
use crate::priors::{HyperParams, LogNormalProposal, Proposal, ProposalWidth};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    /// One Metropolis-Hastings attempt per parameter visit.
    Classical,
    /// Retry rejected visits until acceptance or `k_max` attempts.
    Enforced,
}

impl SamplerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerMode::Classical => "classical",
            SamplerMode::Enforced => "enforced",
        }
    }
}

impl std::fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "c-mhwgs" => Ok(SamplerMode::Classical),
            "enforced" | "e-mhwgs" => Ok(SamplerMode::Enforced),
            other => Err(Error::Config(format!("unknown sampler mode `{other}`"))),
        }
    }
}

/// Settings of one Markov chain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Retained Gibbs cycles `L`.
    pub samples: usize,
    /// Discarded warm-up cycles.
    pub burnin: usize,
    /// Attempt cap per visit in enforced mode.
    pub k_max: usize,
    /// Additive widening of the proposal log-standard-deviation.
    pub delta: f64,
    pub mode: SamplerMode,
    #[serde(default)]
    pub proposal_width: ProposalWidth,
    /// Parameters held at their current value and skipped by the Gibbs sweep.
    #[serde(default)]
    pub frozen: Vec<ParamSlot>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            burnin: 500,
            k_max: 50,
            delta: 0.02,
            mode: SamplerMode::Enforced,
            proposal_width: ProposalWidth::Own,
            frozen: Vec::new(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("at least one retained Gibbs sample is required".into()));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    /// Attempts allowed per parameter visit.
    pub fn attempts_per_visit(&self) -> usize {
        match self.mode {
            SamplerMode::Classical => 1,
            SamplerMode::Enforced => self.k_max,
        }
    }
}

/// Current sample of the chain plus likelihood cache and acceptance tallies.
///
/// The modulation value of every (row, metabolite) pair is cached so that a
/// proposal on one constant only re-evaluates one column.
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    params: KineticParams<T>,
    sigma_e: T,
    ssr: T,
    log_like: T,
    accept_counts: Vec<u64>,
    attempt_counts: Vec<u64>,
    modulation: Vec<T>,
}

impl<T: Scalar> ChainState<T> {
    /// Builds a state at `(rho, mu)` with `alpha` set to its least-squares value.
    pub fn new(data: &Dataset<T>, rho: Vec<T>, mu: Vec<T>, sigma_e: T) -> Result<Self> {
        let m = data.n_metabolites();
        if rho.len() != m || mu.len() != m {
            return Err(Error::Domain(format!(
                "chain state needs {m} values of rho and mu, got {} and {}",
                rho.len(),
                mu.len()
            )));
        }
        let mut params = KineticParams::new(rho, mu, T::zero())?;
        if !(sigma_e.is_finite() && sigma_e > T::zero()) {
            return Err(Error::Domain(format!("noise std {sigma_e} must be positive")));
        }
        let mut modulation = Vec::with_capacity(data.len() * m);
        for c in data.rows() {
            modulation.extend((0..m).map(|i| modulation_unchecked(c[i], params.rho[i], params.mu[i])));
        }
        let unit: Vec<T> = modulation
            .chunks_exact(m)
            .map(|r| guarded_product(r.iter().copied()))
            .collect();
        params.alpha = alpha_from_products(data.rates(), &unit)?.alpha;
        let ssr = sum_sq_residuals(data.rates(), &unit, params.alpha);
        Ok(Self {
            log_like: gaussian_log_likelihood(ssr, data.len(), sigma_e),
            params,
            sigma_e,
            ssr,
            accept_counts: vec![0; 2 * m],
            attempt_counts: vec![0; 2 * m],
            modulation,
        })
    }

    pub fn params(&self) -> &KineticParams<T> {
        &self.params
    }

    pub fn sigma_e(&self) -> T {
        self.sigma_e
    }

    /// Cached `log p(y | theta, alpha)` at the current `sigma_e`.
    pub fn log_like(&self) -> T {
        self.log_like
    }

    pub fn ssr(&self) -> T {
        self.ssr
    }

    /// Changes the noise level used by the likelihood.
    pub fn set_sigma_e(&mut self, sigma_e: T, n: usize) -> Result<()> {
        if !(sigma_e.is_finite() && sigma_e > T::zero()) {
            return Err(Error::Domain(format!("noise std {sigma_e} must be positive")));
        }
        self.sigma_e = sigma_e;
        self.log_like = gaussian_log_likelihood(self.ssr, n, sigma_e);
        Ok(())
    }

    /// Accepted proposals per parameter, indexed by Gibbs position.
    pub fn accept_counts(&self) -> &[u64] {
        &self.accept_counts
    }

    /// Proposals made per parameter, indexed by Gibbs position.
    pub fn attempt_counts(&self) -> &[u64] {
        &self.attempt_counts
    }

    pub fn acceptance_rate(&self) -> f64 {
        let attempts: u64 = self.attempt_counts.iter().sum();
        if attempts == 0 {
            return 0.0;
        }
        self.accept_counts.iter().sum::<u64>() as f64 / attempts as f64
    }

    pub fn reset_counts(&mut self) {
        self.accept_counts.fill(0);
        self.attempt_counts.fill(0);
    }

    /// Likelihood recomputed from scratch, for consistency checks.
    pub fn recomputed_log_like(&self, data: &Dataset<T>) -> Result<T> {
        log_likelihood(data, &self.params, self.sigma_e)
    }

    fn n_metabolites(&self) -> usize {
        self.params.n_metabolites()
    }
}

fn sum_sq_residuals<T: Scalar>(rates: &[T], unit: &[T], alpha: T) -> T {
    rates
        .iter()
        .zip(unit)
        .map(|(&y, &w)| {
            let r = y - alpha * w;
            r * r
        })
        .sum()
}

/// Scratch buffers for the visit of one parameter.
struct Visit<T> {
    slot: ParamSlot,
    /// Product of the modulation factors of all other metabolites, per row.
    rest: Vec<T>,
    column: Vec<T>,
    unit: Vec<T>,
    log_std: T,
}

/// Outcome of one parameter visit, reported to cycle observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisitRecord {
    pub slot: ParamSlot,
    pub attempts: usize,
    pub accepted: bool,
}

/// Retained samples of a chain and the state it ended in.
#[derive(Debug, Clone)]
pub struct ChainRun<T> {
    pub samples: Vec<KineticParams<T>>,
    pub final_state: ChainState<T>,
    /// Gibbs cycles executed, burn-in included.
    pub cycles: usize,
}

/// Metropolis-Hastings within Gibbs sampler for a fixed dataset and prior.
pub struct Sampler<'a, T: Scalar, P = LogNormalProposal> {
    data: &'a Dataset<T>,
    hyper: &'a HyperParams<T>,
    config: &'a SamplerConfig,
    proposal: P,
    delta: T,
    order: Vec<ParamSlot>,
}

impl<'a, T: Scalar> Sampler<'a, T, LogNormalProposal> {
    pub fn new(data: &'a Dataset<T>, hyper: &'a HyperParams<T>, config: &'a SamplerConfig) -> Result<Self> {
        Self::with_proposal(data, hyper, config, LogNormalProposal)
    }
}

impl<'a, T: Scalar, P: Proposal<T>> Sampler<'a, T, P> {
    pub fn with_proposal(
        data: &'a Dataset<T>,
        hyper: &'a HyperParams<T>,
        config: &'a SamplerConfig,
        proposal: P,
    ) -> Result<Self> {
        config.validate()?;
        hyper.validate()?;
        let m = data.n_metabolites();
        if hyper.n_metabolites() != m {
            return Err(Error::Domain(format!(
                "hyperparameters describe {} metabolites, dataset has {m}",
                hyper.n_metabolites()
            )));
        }
        if let Some(s) = config.frozen.iter().find(|s| s.metabolite >= m) {
            return Err(Error::Config(format!("frozen parameter {s} is out of range")));
        }
        let order = gibbs_order(m).filter(|s| !config.frozen.contains(s)).collect();
        Ok(Self {
            data,
            hyper,
            config,
            proposal,
            delta: T::lit(config.delta),
            order,
        })
    }

    /// Parameters visited by one Gibbs cycle, in order.
    pub fn order(&self) -> &[ParamSlot] {
        &self.order
    }

    fn check_state(&self, state: &ChainState<T>) -> Result<()> {
        if state.n_metabolites() != self.data.n_metabolites()
            || state.modulation.len() != self.data.len() * self.data.n_metabolites()
        {
            return Err(Error::Domain("chain state does not belong to this dataset".into()));
        }
        Ok(())
    }

    fn begin_visit(&self, state: &ChainState<T>, slot: ParamSlot) -> Result<Visit<T>> {
        let current = state.params.get(slot);
        if !(current > T::zero() && current.is_finite()) {
            return Err(Error::Domain(format!(
                "{slot} = {current} cannot be sampled: log-Gaussian proposals need a positive value"
            )));
        }
        let m = self.data.n_metabolites();
        let i = slot.metabolite;
        let rest = state
            .modulation
            .chunks_exact(m)
            .map(|r| guarded_product(r.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, h)| *h)))
            .collect();
        Ok(Visit {
            slot,
            rest,
            column: vec![T::zero(); self.data.len()],
            unit: vec![T::zero(); self.data.len()],
            log_std: self.config.proposal_width.log_std(self.hyper, slot, self.delta),
        })
    }

    /// Fills the visit buffers for `value` and returns `(alpha, ssr, log_like)`.
    fn evaluate(&self, state: &ChainState<T>, visit: &mut Visit<T>, value: T) -> Result<(T, T, T)> {
        let i = visit.slot.metabolite;
        let (rho, mu) = match visit.slot.kind {
            crate::model::ParamKind::Rho => (value, state.params.mu[i]),
            crate::model::ParamKind::Mu => (state.params.rho[i], value),
        };
        for (t, c) in self.data.rows().enumerate() {
            let h = modulation_unchecked(c[i], rho, mu);
            visit.column[t] = h;
            visit.unit[t] = visit.rest[t] * h;
        }
        let alpha = alpha_from_products(self.data.rates(), &visit.unit)?.alpha;
        let ssr = sum_sq_residuals(self.data.rates(), &visit.unit, alpha);
        Ok((alpha, ssr, gaussian_log_likelihood(ssr, self.data.len(), state.sigma_e)))
    }

    fn log_ratio(&self, state: &ChainState<T>, visit: &Visit<T>, value: T, cand_log_like: T) -> T {
        let slot = visit.slot;
        let current = state.params.get(slot);
        let likelihood = cand_log_like - state.log_like;
        let prior = self.hyper.log_prior(slot, value) - self.hyper.log_prior(slot, current);
        let hastings = self.proposal.log_density(current, value, visit.log_std)
            - self.proposal.log_density(value, current, visit.log_std);
        likelihood + prior + hastings
    }

    /// Log of the acceptance ratio `gamma` for moving `slot` to `value`.
    pub fn log_acceptance_ratio(&self, state: &ChainState<T>, slot: ParamSlot, value: T) -> Result<T> {
        self.check_state(state)?;
        let mut visit = self.begin_visit(state, slot)?;
        let (_, _, ll) = self.evaluate(state, &mut visit, value)?;
        Ok(self.log_ratio(state, &visit, value, ll))
    }

    fn attempt<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, visit: &mut Visit<T>, rng: &mut R) -> bool {
        let slot = visit.slot;
        let pos = slot.position();
        state.attempt_counts[pos] += 1;
        let current = state.params.get(slot);
        let candidate = self.proposal.sample(current, visit.log_std, rng);
        let u: f64 = rng.random();
        if !(candidate.is_finite() && candidate > T::zero()) {
            log::debug!("{slot}: proposal {candidate} left the positive reals, rejected");
            return false;
        }
        let (alpha, ssr, ll) = match self.evaluate(state, visit, candidate) {
            Ok(v) => v,
            Err(e) => {
                log::debug!("{slot}: candidate {candidate} rejected ({e})");
                return false;
            }
        };
        if !ll.is_finite() {
            log::debug!("{slot}: candidate {candidate} has non-finite likelihood, rejected");
            return false;
        }
        let log_gamma = self.log_ratio(state, visit, candidate, ll);
        if !(T::lit(u.ln()) <= log_gamma) {
            return false;
        }
        let m = self.data.n_metabolites();
        for (t, h) in visit.column.iter().enumerate() {
            state.modulation[t * m + slot.metabolite] = *h;
        }
        state.params.set(slot, candidate);
        state.params.alpha = alpha;
        state.ssr = ssr;
        state.log_like = ll;
        state.accept_counts[pos] += 1;
        debug_assert!(
            {
                let fresh = state.recomputed_log_like(self.data).unwrap_or(T::nan());
                let tol = T::lit(1e-9).max(T::epsilon() * T::lit(1e4));
                (fresh - ll).abs() <= tol * T::one().max(ll.abs())
            },
            "cached log-likelihood drifted from a fresh evaluation"
        );
        true
    }

    /// One Metropolis-Hastings attempt on `slot`. Returns whether it was accepted.
    pub fn mh_step<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, slot: ParamSlot, rng: &mut R) -> Result<bool> {
        self.check_state(state)?;
        let mut visit = self.begin_visit(state, slot)?;
        Ok(self.attempt(state, &mut visit, rng))
    }

    /// One sweep over all non-frozen parameters.
    pub fn gibbs_cycle<R: Rng + ?Sized>(&self, state: &mut ChainState<T>, rng: &mut R) -> Result<()> {
        self.gibbs_cycle_observed(state, rng, |_| {})
    }

    /// [`gibbs_cycle`](Self::gibbs_cycle) reporting every visit to `observer`.
    pub fn gibbs_cycle_observed<R, F>(&self, state: &mut ChainState<T>, rng: &mut R, mut observer: F) -> Result<()>
    where
        R: Rng + ?Sized,
        F: FnMut(VisitRecord),
    {
        self.check_state(state)?;
        let max_attempts = self.config.attempts_per_visit();
        for &slot in &self.order {
            let mut visit = self.begin_visit(state, slot)?;
            let mut attempts = 0;
            let mut accepted = false;
            while attempts < max_attempts && !accepted {
                accepted = self.attempt(state, &mut visit, rng);
                attempts += 1;
            }
            observer(VisitRecord {
                slot,
                attempts,
                accepted,
            });
        }
        Ok(())
    }

    /// Runs `burnin` discarded cycles then `samples` retained cycles.
    pub fn run_chain<R: Rng + ?Sized>(&self, mut state: ChainState<T>, rng: &mut R) -> Result<ChainRun<T>> {
        for _ in 0..self.config.burnin {
            self.gibbs_cycle(&mut state, rng)?;
        }
        let mut samples = Vec::with_capacity(self.config.samples);
        for _ in 0..self.config.samples {
            self.gibbs_cycle(&mut state, rng)?;
            samples.push(state.params.clone());
        }
        Ok(ChainRun {
            samples,
            final_state: state,
            cycles: self.config.burnin + self.config.samples,
        })
    }
}

/// The Gibbs visiting order `rho_1, mu_1, rho_2, mu_2, ..., rho_m, mu_m`.
pub fn gibbs_order(n_metabolites: usize) -> impl Iterator<Item = ParamSlot> {
    (0..2 * n_metabolites).map(ParamSlot::from_position)
}

/// Lag-`lag` autocorrelation of the log-samples of one parameter.
///
/// Returns `None` for constant or too-short chains.
pub fn log_autocorrelation<T: Scalar>(samples: &[KineticParams<T>], slot: ParamSlot, lag: usize) -> Option<f64> {
    if samples.len() <= lag + 1 {
        return None;
    }
    let xs: Vec<f64> = samples.iter().map(|p| p.get(slot).as_f64().ln()).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    if !(var > 0.0) || !var.is_finite() {
        return None;
    }
    let cov: f64 = xs.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
    Some(cov / var)
}
