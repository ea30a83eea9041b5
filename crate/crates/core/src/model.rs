//! Monod rate model: modulation functions, the macroscopic rate, the Gaussian
//! likelihood, the closed-form maximal rate and the double-component
//! identifiability transform.
//!
//! Every modulation function is treated as a double component
//! `c / (c + rho) * 1 / (1 + mu * c)`; activation (`mu = 0`), inhibition
//! (`rho = 0`) and neutral (both zero) effects are special cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which of the two kinetic constants of a modulation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    /// Half-saturation constant.
    Rho,
    /// Half-inhibition constant.
    Mu,
}

/// Address of a single kinetic parameter: metabolite index plus kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamSlot {
    pub metabolite: usize,
    pub kind: ParamKind,
}

impl ParamSlot {
    pub fn rho(metabolite: usize) -> Self {
        Self {
            metabolite,
            kind: ParamKind::Rho,
        }
    }

    pub fn mu(metabolite: usize) -> Self {
        Self {
            metabolite,
            kind: ParamKind::Mu,
        }
    }

    /// Position in the Gibbs order `rho_1, mu_1, rho_2, mu_2, ...`.
    pub fn position(self) -> usize {
        2 * self.metabolite
            + match self.kind {
                ParamKind::Rho => 0,
                ParamKind::Mu => 1,
            }
    }

    pub fn from_position(position: usize) -> Self {
        if position.is_multiple_of(2) {
            Self::rho(position / 2)
        } else {
            Self::mu(position / 2)
        }
    }

    /// The other constant of the same modulation function.
    pub fn companion(self) -> Self {
        match self.kind {
            ParamKind::Rho => Self::mu(self.metabolite),
            ParamKind::Mu => Self::rho(self.metabolite),
        }
    }
}

impl std::fmt::Display for ParamSlot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ParamKind::Rho => write!(f, "rho_{}", self.metabolite + 1),
            ParamKind::Mu => write!(f, "mu_{}", self.metabolite + 1),
        }
    }
}

/// Kinetic parameters `{rho_i, mu_i}` and the maximal rate constant `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticParams<T> {
    pub rho: Vec<T>,
    pub mu: Vec<T>,
    pub alpha: T,
}

impl<T: Scalar> KineticParams<T> {
    pub fn new(rho: Vec<T>, mu: Vec<T>, alpha: T) -> Result<Self> {
        let params = Self { rho, mu, alpha };
        params.validate()?;
        Ok(params)
    }

    /// All-neutral parameters: the rate is `alpha` everywhere.
    pub fn neutral(n_metabolites: usize, alpha: T) -> Self {
        Self {
            rho: vec![T::zero(); n_metabolites],
            mu: vec![T::zero(); n_metabolites],
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.len() != self.mu.len() {
            return Err(Error::Domain(format!(
                "rho has {} entries but mu has {}",
                self.rho.len(),
                self.mu.len()
            )));
        }
        if self.rho.is_empty() {
            return Err(Error::Domain("at least one metabolite is required".into()));
        }
        let bad = |x: &T| !x.is_finite() || *x < T::zero();
        if let Some(i) = self.rho.iter().position(bad) {
            return Err(Error::Domain(format!(
                "rho_{} = {} is not a non-negative real",
                i + 1,
                self.rho[i]
            )));
        }
        if let Some(i) = self.mu.iter().position(bad) {
            return Err(Error::Domain(format!(
                "mu_{} = {} is not a non-negative real",
                i + 1,
                self.mu[i]
            )));
        }
        if bad(&self.alpha) {
            return Err(Error::Domain(format!(
                "alpha = {} is not a non-negative real",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn n_metabolites(&self) -> usize {
        self.rho.len()
    }

    pub fn get(&self, slot: ParamSlot) -> T {
        match slot.kind {
            ParamKind::Rho => self.rho[slot.metabolite],
            ParamKind::Mu => self.mu[slot.metabolite],
        }
    }

    pub fn set(&mut self, slot: ParamSlot, value: T) {
        match slot.kind {
            ParamKind::Rho => self.rho[slot.metabolite] = value,
            ParamKind::Mu => self.mu[slot.metabolite] = value,
        }
    }

    pub fn cast<U: Scalar>(&self) -> KineticParams<U> {
        KineticParams {
            rho: self.rho.iter().map(|x| U::lit(x.as_f64())).collect(),
            mu: self.mu.iter().map(|x| U::lit(x.as_f64())).collect(),
            alpha: U::lit(self.alpha.as_f64()),
        }
    }
}

/// Observed rates `y(t)` together with the noiseless concentrations `c(t)`.
///
/// Concentrations are stored row-major, one row of `m` values per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    concentrations: Vec<T>,
    rates: Vec<T>,
    n_metabolites: usize,
    noise_std: Option<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(rows: Vec<Vec<T>>, rates: Vec<T>, noise_std: Option<T>) -> Result<Self> {
        let n_metabolites = rows.first().map_or(0, Vec::len);
        if let Some(t) = rows.iter().position(|r| r.len() != n_metabolites) {
            return Err(Error::Domain(format!(
                "row {} has {} concentrations, expected {}",
                t + 1,
                rows[t].len(),
                n_metabolites
            )));
        }
        Self::from_flat(rows.into_iter().flatten().collect(), rates, n_metabolites, noise_std)
    }

    pub fn from_flat(
        concentrations: Vec<T>,
        rates: Vec<T>,
        n_metabolites: usize,
        noise_std: Option<T>,
    ) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Domain("dataset needs at least one observation".into()));
        }
        if n_metabolites == 0 {
            return Err(Error::Domain("dataset needs at least one metabolite".into()));
        }
        if concentrations.len() != rates.len() * n_metabolites {
            return Err(Error::Domain(format!(
                "{} concentration values do not form {} rows of {}",
                concentrations.len(),
                rates.len(),
                n_metabolites
            )));
        }
        if let Some(k) = concentrations.iter().position(|c| !(c.is_finite() && *c > T::zero())) {
            return Err(Error::Domain(format!(
                "concentration c_{}({}) = {} must be strictly positive and finite",
                k % n_metabolites + 1,
                k / n_metabolites + 1,
                concentrations[k]
            )));
        }
        if let Some(t) = rates.iter().position(|y| !y.is_finite()) {
            return Err(Error::Domain(format!("rate y({}) is not finite", t + 1)));
        }
        if let Some(s) = noise_std {
            if !(s.is_finite() && s >= T::zero()) {
                return Err(Error::Domain(format!("noise std {s} must be non-negative")));
            }
        }
        Ok(Self {
            concentrations,
            rates,
            n_metabolites,
            noise_std,
        })
    }

    /// Number of observations `N`.
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn n_metabolites(&self) -> usize {
        self.n_metabolites
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    pub fn noise_std(&self) -> Option<T> {
        self.noise_std
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.concentrations[t * self.n_metabolites..(t + 1) * self.n_metabolites]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.concentrations.chunks_exact(self.n_metabolites)
    }

    pub fn column(&self, metabolite: usize) -> impl ExactSizeIterator<Item = T> + '_ {
        self.rows().map(move |r| r[metabolite])
    }

    /// Reorders observations; `order` must be a permutation of `0..N`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut concentrations = Vec::with_capacity(self.concentrations.len());
        for &t in order {
            concentrations.extend_from_slice(self.row(t));
        }
        Self {
            concentrations,
            rates: order.iter().map(|&t| self.rates[t]).collect(),
            n_metabolites: self.n_metabolites,
            noise_std: self.noise_std,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        let conv = |x: &T| U::lit(x.as_f64());
        Dataset {
            concentrations: self.concentrations.iter().map(conv).collect(),
            rates: self.rates.iter().map(conv).collect(),
            n_metabolites: self.n_metabolites,
            noise_std: self.noise_std.as_ref().map(conv),
        }
    }
}

#[inline]
pub(crate) fn modulation_unchecked<T: Scalar>(c: T, rho: T, mu: T) -> T {
    c / (c + rho) / (T::one() + mu * c)
}

/// Double-component modulation `c / (c + rho) * 1 / (1 + mu c)`, in `(0, 1]`.
pub fn modulation<T: Scalar>(c: T, rho: T, mu: T) -> Result<T> {
    if !(c.is_finite() && c > T::zero()) {
        return Err(Error::Domain(format!("concentration {c} must be positive and finite")));
    }
    if !(rho.is_finite() && rho >= T::zero()) {
        return Err(Error::Domain(format!("rho {rho} must be non-negative and finite")));
    }
    if !(mu.is_finite() && mu >= T::zero()) {
        return Err(Error::Domain(format!("mu {mu} must be non-negative and finite")));
    }
    Ok(modulation_unchecked(c, rho, mu))
}

/// Product of already-evaluated modulation factors. Falls back to a sum of
/// logarithms once a factor or the running product drops under the guard.
pub(crate) fn guarded_product<T: Scalar>(factors: impl Iterator<Item = T> + Clone) -> T {
    let guard = T::underflow_guard();
    let mut product = T::one();
    for h in factors.clone() {
        product = product * h;
        if h < guard || product < guard {
            let log_sum: T = factors.map(|h| h.ln()).sum();
            return log_sum.exp();
        }
    }
    product
}

/// `prod_i h(c_i, rho_i, mu_i)`: the rate with `alpha = 1`.
pub(crate) fn modulation_product<T: Scalar>(c: &[T], rho: &[T], mu: &[T]) -> T {
    guarded_product(
        c.iter()
            .zip(rho.iter().zip(mu))
            .map(|(&c, (&r, &m))| modulation_unchecked(c, r, m)),
    )
}

/// Macroscopic rate `alpha * prod_i h(c_i, rho_i, mu_i)`.
pub fn rate<T: Scalar>(c: &[T], params: &KineticParams<T>) -> Result<T> {
    if c.len() != params.n_metabolites() {
        return Err(Error::Domain(format!(
            "concentration vector has {} entries, parameters describe {} metabolites",
            c.len(),
            params.n_metabolites()
        )));
    }
    if let Some(i) = c.iter().position(|x| !(x.is_finite() && *x > T::zero())) {
        return Err(Error::Domain(format!(
            "concentration c_{} = {} must be positive",
            i + 1,
            c[i]
        )));
    }
    Ok(params.alpha * modulation_product(c, &params.rho, &params.mu))
}

fn check_dims<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>) -> Result<()> {
    if data.n_metabolites() != params.n_metabolites() {
        return Err(Error::Domain(format!(
            "dataset has {} metabolites, parameters describe {}",
            data.n_metabolites(),
            params.n_metabolites()
        )));
    }
    Ok(())
}

/// Model predictions `w(c(t))` for every row.
pub fn predictions<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>) -> Result<Vec<T>> {
    check_dims(data, params)?;
    Ok(data
        .rows()
        .map(|c| params.alpha * modulation_product(c, &params.rho, &params.mu))
        .collect())
}

/// Residual sum of squares `sum_t (y(t) - w(c(t)))^2`.
pub fn residual_sum_of_squares<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>) -> Result<T> {
    Ok(predictions(data, params)?
        .into_iter()
        .zip(data.rates())
        .map(|(w, &y)| (y - w) * (y - w))
        .sum())
}

/// Gaussian log-likelihood from a residual sum of squares.
#[inline]
pub fn gaussian_log_likelihood<T: Scalar>(ssr: T, n: usize, sigma_e: T) -> T {
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let var = sigma_e * sigma_e;
    -T::lit(n as f64 / 2.0) * (two_pi * var).ln() - ssr / (T::lit(2.0) * var)
}

/// `log p(y | theta, alpha)` under white Gaussian noise of standard deviation `sigma_e`.
pub fn log_likelihood<T: Scalar>(data: &Dataset<T>, params: &KineticParams<T>, sigma_e: T) -> Result<T> {
    if !(sigma_e.is_finite() && sigma_e > T::zero()) {
        return Err(Error::Domain(format!("noise std {sigma_e} must be positive")));
    }
    let ssr = residual_sum_of_squares(data, params)?;
    Ok(gaussian_log_likelihood(ssr, data.len(), sigma_e))
}

/// Least-squares maximal rate for fixed kinetic parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMle<T> {
    pub alpha: T,
    /// The unconstrained optimum was negative and has been clamped to zero.
    pub clamped: bool,
}

/// `sum y w̄ / sum w̄²` from precomputed unit-rate products `w̄(c(t))`.
pub fn alpha_from_products<T: Scalar>(rates: &[T], unit_rates: &[T]) -> Result<AlphaMle<T>> {
    let (num, den) = rates
        .iter()
        .zip(unit_rates)
        .fold((T::zero(), T::zero()), |(n, d), (&y, &w)| (n + y * w, d + w * w));
    if !(den > T::zero()) {
        return Err(Error::DegenerateModel);
    }
    let alpha = num / den;
    if alpha < T::zero() {
        log::debug!("maximal-rate optimum {alpha} is negative; clamped to 0");
        return Ok(AlphaMle {
            alpha: T::zero(),
            clamped: true,
        });
    }
    Ok(AlphaMle { alpha, clamped: false })
}

/// Maximal rate minimizing `sum_t (y(t) - alpha w̄(c(t)))^2` over `alpha >= 0`.
pub fn alpha_mle<T: Scalar>(data: &Dataset<T>, rho: &[T], mu: &[T]) -> Result<AlphaMle<T>> {
    if rho.len() != data.n_metabolites() || mu.len() != data.n_metabolites() {
        return Err(Error::Domain(format!(
            "parameter vectors of length {}/{} do not match {} metabolites",
            rho.len(),
            mu.len(),
            data.n_metabolites()
        )));
    }
    let unit: Vec<T> = data.rows().map(|c| modulation_product(c, rho, mu)).collect();
    alpha_from_products(data.rates(), &unit)
}

/// Equivalent double-component parameters `(1/mu, 1/rho, alpha/(rho mu))`.
///
/// Both triples produce the same rate for every concentration, so a
/// double-component effect is identifiable only up to this involution.
pub fn dual_parameterization<T: Scalar>(rho: T, mu: T, alpha: T) -> Result<(T, T, T)> {
    if !(rho > T::zero() && mu > T::zero() && rho.is_finite() && mu.is_finite()) {
        return Err(Error::NotDoubleComponent);
    }
    Ok((mu.recip(), rho.recip(), alpha / (rho * mu)))
}
