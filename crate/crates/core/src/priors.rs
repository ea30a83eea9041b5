//! Log-Gaussian priors over the kinetic constants, their data-driven
//! initialization and the log-Gaussian random-walk proposal.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, ParamKind, ParamSlot};
use crate::scalar::Scalar;

/// Log-means and log-standard-deviations of the priors on every `rho_i` and `mu_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams<T> {
    pub beta_rho: Vec<T>,
    pub sigma_rho: Vec<T>,
    pub beta_mu: Vec<T>,
    pub sigma_mu: Vec<T>,
}

impl<T: Scalar> HyperParams<T> {
    pub fn new(beta_rho: Vec<T>, sigma_rho: Vec<T>, beta_mu: Vec<T>, sigma_mu: Vec<T>) -> Result<Self> {
        let h = Self {
            beta_rho,
            sigma_rho,
            beta_mu,
            sigma_mu,
        };
        h.validate()?;
        Ok(h)
    }

    /// Same prior `LogNormal(beta, sigma)` on every parameter.
    pub fn uniform(n_metabolites: usize, beta: T, sigma: T) -> Result<Self> {
        Self::new(
            vec![beta; n_metabolites],
            vec![sigma; n_metabolites],
            vec![beta; n_metabolites],
            vec![sigma; n_metabolites],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.beta_rho.len();
        if m == 0 || self.sigma_rho.len() != m || self.beta_mu.len() != m || self.sigma_mu.len() != m {
            return Err(Error::Domain(
                "hyperparameter sequences must share a non-zero length".into(),
            ));
        }
        if self.beta_rho.iter().chain(&self.beta_mu).any(|b| !b.is_finite()) {
            return Err(Error::Domain("prior log-means must be finite".into()));
        }
        if self
            .sigma_rho
            .iter()
            .chain(&self.sigma_mu)
            .any(|s| !(s.is_finite() && *s > T::zero()))
        {
            return Err(Error::Domain("prior log-standard-deviations must be positive".into()));
        }
        Ok(())
    }

    pub fn n_metabolites(&self) -> usize {
        self.beta_rho.len()
    }

    pub fn beta(&self, slot: ParamSlot) -> T {
        match slot.kind {
            ParamKind::Rho => self.beta_rho[slot.metabolite],
            ParamKind::Mu => self.beta_mu[slot.metabolite],
        }
    }

    pub fn sigma(&self, slot: ParamSlot) -> T {
        match slot.kind {
            ParamKind::Rho => self.sigma_rho[slot.metabolite],
            ParamKind::Mu => self.sigma_mu[slot.metabolite],
        }
    }

    /// Prior log-density of `x` for the parameter at `slot`.
    pub fn log_prior(&self, slot: ParamSlot, x: T) -> T {
        log_prior_density(x, self.beta(slot), self.sigma(slot))
    }

    /// Largest absolute change of any hyperparameter between `self` and `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let pairs = [
            (&self.beta_rho, &other.beta_rho),
            (&self.sigma_rho, &other.sigma_rho),
            (&self.beta_mu, &other.beta_mu),
            (&self.sigma_mu, &other.sigma_mu),
        ];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (*x - *y).abs()))
            .fold(T::zero(), T::max)
    }
}

fn ln_sqrt_two_pi<T: Scalar>() -> T {
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln())
}

/// Log of the log-Gaussian density `1/(x sqrt(2 pi) sigma) exp(-(ln x - beta)^2 / (2 sigma^2))`.
///
/// Returns negative infinity for `x <= 0`. `sigma` must be positive.
pub fn log_prior_density<T: Scalar>(x: T, beta: T, sigma: T) -> T {
    debug_assert!(sigma > T::zero(), "prior sigma must be positive");
    if !(x > T::zero()) {
        return T::neg_infinity();
    }
    let lx = x.ln();
    let z = (lx - beta) / sigma;
    -lx - ln_sqrt_two_pi::<T>() - sigma.ln() - T::lit(0.5) * z * z
}

/// Initial hyperparameters from the observed concentration ranges.
///
/// For metabolite `i` with range `[lo, hi]` the log-prior of `rho_i` spans
/// `[ln(0.1 lo), ln(10 hi)]`: its mean is the midpoint and its standard
/// deviation a third of the width. The `mu_i` prior uses the range of `1/c_i`.
pub fn init_hyperparams<T: Scalar>(data: &Dataset<T>) -> Result<HyperParams<T>> {
    let m = data.n_metabolites();
    let tenth = T::lit(0.1);
    let ten = T::lit(10.0);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let mut h = HyperParams {
        beta_rho: Vec::with_capacity(m),
        sigma_rho: Vec::with_capacity(m),
        beta_mu: Vec::with_capacity(m),
        sigma_mu: Vec::with_capacity(m),
    };
    for i in 0..m {
        let (lo, hi) = data
            .column(i)
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), c| (lo.min(c), hi.max(c)));
        if !(lo > T::zero()) {
            return Err(Error::Domain(format!(
                "metabolite {} has a non-positive concentration",
                i + 1
            )));
        }
        let rho_low = (tenth * lo).ln();
        let rho_high = (ten * hi).ln();
        h.beta_rho.push((rho_low + rho_high) / two);
        h.sigma_rho.push((rho_high - rho_low) / three);
        let mu_low = (tenth / hi).ln();
        let mu_high = (ten / lo).ln();
        h.beta_mu.push((mu_low + mu_high) / two);
        h.sigma_mu.push((mu_high - mu_low) / three);
    }
    h.validate()?;
    Ok(h)
}

/// Initial kinetic constants at the prior medians: `(exp(beta_rho), exp(beta_mu))`.
pub fn init_params<T: Scalar>(h: &HyperParams<T>) -> (Vec<T>, Vec<T>) {
    (
        h.beta_rho.iter().map(|b| b.exp()).collect(),
        h.beta_mu.iter().map(|b| b.exp()).collect(),
    )
}

/// Which prior standard deviation sets the proposal width for a parameter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalWidth {
    /// Prior std of the parameter being sampled.
    #[default]
    Own,
    /// Prior std of the other constant of the same metabolite
    /// (`sigma_mu_i` when sampling `rho_i` and vice versa).
    Companion,
}

impl ProposalWidth {
    /// Log-standard-deviation `sigma + delta` of the proposal for `slot`.
    pub fn log_std<T: Scalar>(self, h: &HyperParams<T>, slot: ParamSlot, delta: T) -> T {
        let sigma = match self {
            ProposalWidth::Own => h.sigma(slot),
            ProposalWidth::Companion => h.sigma(slot.companion()),
        };
        sigma + delta
    }
}

/// Draws `current * exp((prior_sigma + delta) Z)` with `Z ~ N(0, 1)`.
pub fn proposal_sample<T: Scalar, R: Rng + ?Sized>(current: T, prior_sigma: T, delta: T, rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    (current.ln() + (prior_sigma + delta) * T::lit(z)).exp()
}

/// Log-density `log g(candidate | given)` of [`proposal_sample`].
pub fn proposal_log_density<T: Scalar>(candidate: T, given: T, prior_sigma: T, delta: T) -> T {
    log_prior_density(candidate, given.ln(), prior_sigma + delta)
}

/// Proposal kernel on a positive parameter, parameterized by a log-scale width.
pub trait Proposal<T: Scalar> {
    fn sample<R: Rng + ?Sized>(&self, current: T, log_std: T, rng: &mut R) -> T;
    /// `log g(candidate | given)`; only differences between calls matter.
    fn log_density(&self, candidate: T, given: T, log_std: T) -> T;
}

/// Log-Gaussian random walk centred on the log of the current value.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogNormalProposal;

impl<T: Scalar> Proposal<T> for LogNormalProposal {
    fn sample<R: Rng + ?Sized>(&self, current: T, log_std: T, rng: &mut R) -> T {
        proposal_sample(current, log_std, T::zero(), rng)
    }

    fn log_density(&self, candidate: T, given: T, log_std: T) -> T {
        proposal_log_density(candidate, given, log_std, T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

    #[test]
    fn log_prior_examples() {
        let (beta, sigma) = (0.7_f64, 0.4_f64);
        let at_mode = log_prior_density(beta.exp(), beta, sigma);
        assert!((at_mode - (-beta - LN_SQRT_2PI - sigma.ln())).abs() < 1e-14);
        let one_sigma = log_prior_density((beta + sigma).exp(), beta, sigma);
        assert!((one_sigma - (-(beta + sigma) - LN_SQRT_2PI - sigma.ln() - 0.5)).abs() < 1e-14);
        assert_eq!(log_prior_density(0.0, beta, sigma), f64::NEG_INFINITY);
        assert_eq!(log_prior_density(-1.0, beta, sigma), f64::NEG_INFINITY);
    }

    #[test]
    fn log_prior_matches_gaussian_of_log() {
        // log N(ln x; beta, sigma) - ln x, evaluated with the textbook formula.
        for &(x, beta, sigma) in &[(0.03, -2.0, 1.3), (12.0, 1.5, 0.2), (1.0, 0.0, 5.0)] {
            let lx: f64 = f64::ln(x);
            let normal = -0.5 * ((lx - beta) / sigma).powi(2) - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
            assert!((log_prior_density(x, beta, sigma) - (normal - lx)).abs() < 1e-13);
        }
    }

    fn two_point(lo: f64, hi: f64) -> Dataset<f64> {
        Dataset::new(vec![vec![lo], vec![hi]], vec![1.0, 2.0], None).unwrap()
    }

    #[test]
    fn init_hyperparams_examples() {
        let h = init_hyperparams(&two_point(0.1, 1.0)).unwrap();
        let ln = f64::ln;
        assert!((h.beta_rho[0] - (ln(0.01) + ln(10.0)) / 2.0).abs() < 1e-14);
        assert!((h.sigma_rho[0] - (ln(10.0) - ln(0.01)) / 3.0).abs() < 1e-14);
        assert!((h.beta_mu[0] - (ln(0.1) + ln(100.0)) / 2.0).abs() < 1e-14);
        assert!((h.sigma_mu[0] - (ln(100.0) - ln(0.1)) / 3.0).abs() < 1e-14);

        let h = init_hyperparams(&two_point(0.37, 0.37)).unwrap();
        assert!((h.beta_rho[0] - ln(0.37)).abs() < 1e-14);
        assert!((h.sigma_rho[0] - ln(100.0) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn init_hyperparams_reciprocal_symmetry() {
        let d = Dataset::new(
            vec![vec![0.2, 3.0], vec![0.9, 0.4], vec![0.05, 1.1]],
            vec![1.0, 1.0, 1.0],
            None,
        )
        .unwrap();
        let h: HyperParams<f64> = init_hyperparams(&d).unwrap();
        for i in 0..2 {
            assert!((h.beta_mu[i] + h.beta_rho[i]).abs() < 1e-12);
            assert!((h.sigma_mu[i] - h.sigma_rho[i]).abs() < 1e-12);
            let lo = d.column(i).fold(f64::INFINITY, f64::min);
            let hi = d.column(i).fold(0.0, f64::max);
            // The +-1.5 sigma band reproduces the log interval [ln 0.1 lo, ln 10 hi].
            assert!((h.beta_rho[i] - 1.5 * h.sigma_rho[i] - (0.1 * lo).ln()).abs() < 1e-12);
            assert!((h.beta_rho[i] + 1.5 * h.sigma_rho[i] - (10.0 * hi).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn init_params_examples() {
        let h = HyperParams::new(vec![0.0], vec![1.0], vec![2f64.ln()], vec![1.0]).unwrap();
        let (rho, mu) = init_params(&h);
        assert_eq!(rho, vec![1.0]);
        assert!((mu[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hyperparams_validation() {
        assert!(HyperParams::new(vec![0.0], vec![0.0], vec![0.0], vec![1.0]).is_err());
        assert!(HyperParams::new(vec![0.0, 1.0], vec![1.0], vec![0.0], vec![1.0]).is_err());
        assert!(HyperParams::<f64>::new(vec![], vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn proposal_density_examples() {
        let (cur, s, d) = (2.5_f64, 0.3, 0.02);
        let mode = proposal_log_density(cur, cur, s, d);
        let expected = -(cur * (2.0 * std::f64::consts::PI).sqrt() * (s + d)).ln();
        assert!((mode - expected).abs() < 1e-14);
        let (a, b) = (0.7, 1.9);
        let forward = proposal_log_density(a, b, s, d);
        let backward = proposal_log_density(b, a, s, d);
        assert!((forward - backward).abs() > 1e-3);
        // The asymmetry is exactly the Jacobian ratio ln(b / a).
        assert!(((forward - backward) - (b / a).ln()).abs() < 1e-13);
    }

    #[test]
    fn proposal_log_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| proposal_sample(1.0_f64, 0.48, 0.02, &mut rng).ln())
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 3.0 * 0.5 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn proposal_width_switch() {
        let h = HyperParams::new(vec![0.0], vec![0.5], vec![0.0], vec![2.0]).unwrap();
        let slot = ParamSlot::rho(0);
        assert_eq!(ProposalWidth::Own.log_std(&h, slot, 0.02), 0.52);
        assert_eq!(ProposalWidth::Companion.log_std(&h, slot, 0.02), 2.02);
    }

    #[test]
    fn prior_integrates_to_one() {
        // Trapezoid rule in u = ln x: integrand p(e^u) e^u.
        let (beta, sigma) = (-1.2_f64, 0.8_f64);
        let (lo, hi, n) = (beta - 12.0 * sigma, beta + 12.0 * sigma, 20_000);
        let du = (hi - lo) / n as f64;
        let f = |u: f64| (log_prior_density(u.exp(), beta, sigma) + u).exp();
        let mut total = 0.5 * (f(lo) + f(hi));
        for k in 1..n {
            total += f(lo + k as f64 * du);
        }
        assert!((total * du - 1.0).abs() < 1e-6);
    }
}
