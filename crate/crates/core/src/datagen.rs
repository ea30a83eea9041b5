//! Synthetic Monod datasets: known kinetics, truncated-Gaussian
//! concentrations and additive Gaussian rate noise.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{modulation_product, Dataset, KineticParams};
use crate::scalar::Scalar;

/// Qualitative effect of a metabolite on the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectType {
    Activation,
    Inhibition,
    DoubleComponent,
    Neutral,
}

impl EffectType {
    fn matches(self, rho: f64, mu: f64) -> bool {
        match self {
            EffectType::Activation => rho > 0.0 && mu == 0.0,
            EffectType::Inhibition => rho == 0.0 && mu > 0.0,
            EffectType::DoubleComponent => rho > 0.0 && mu > 0.0,
            EffectType::Neutral => rho == 0.0 && mu == 0.0,
        }
    }
}

/// Smallest covariance eigenvalue of the reference concentration model.
pub const TABLE1_EIGEN_MIN: f64 = 1.34e-5;
/// Largest covariance eigenvalue of the reference concentration model.
pub const TABLE1_EIGEN_MAX: f64 = 1.40e-1;
/// Seed of the eigenbasis of the reference concentration covariance.
pub const TABLE1_COVARIANCE_SEED: u64 = 0x0007_AB1E_0001;

/// Multivariate Gaussian of the concentrations, truncated to the positive orthant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationModel {
    pub mean: Vec<f64>,
    /// Row-major symmetric positive-definite covariance.
    pub covariance: Vec<Vec<f64>>,
}

impl ConcentrationModel {
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Self {
        let m = mean.len();
        let covariance = (0..m)
            .map(|i| (0..m).map(|j| if i == j { variance } else { 0.0 }).collect())
            .collect();
        Self { mean, covariance }
    }

    /// Covariance `Q diag(lambda) Q^T` with eigenvalues spaced log-uniformly
    /// in `[eigen_min, eigen_max]` and a random orthogonal `Q`.
    pub fn from_spectrum<R: Rng + ?Sized>(mean: Vec<f64>, eigen_min: f64, eigen_max: f64, rng: &mut R) -> Result<Self> {
        let m = mean.len();
        if m == 0 {
            return Err(Error::Config(
                "concentration model needs at least one metabolite".into(),
            ));
        }
        if !(eigen_min > 0.0 && eigen_max >= eigen_min && eigen_max.is_finite()) {
            return Err(Error::Config(format!(
                "eigenvalue range [{eigen_min}, {eigen_max}] must be positive and ordered"
            )));
        }
        let eigen: Vec<f64> = (0..m)
            .map(|k| {
                let t = if m == 1 { 1.0 } else { k as f64 / (m - 1) as f64 };
                (eigen_min.ln() + t * (eigen_max.ln() - eigen_min.ln())).exp()
            })
            .collect();
        let gaussian = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let qr = gaussian.qr();
        let r = qr.r();
        // Sign-fix so Q is Haar distributed.
        let mut q = qr.q();
        for j in 0..m {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let sigma = &q * DMatrix::from_diagonal(&DVector::from_vec(eigen)) * q.transpose();
        let covariance = (0..m)
            .map(|i| (0..m).map(|j| 0.5 * (sigma[(i, j)] + sigma[(j, i)])).collect())
            .collect();
        Ok(Self { mean, covariance })
    }

    pub fn n_metabolites(&self) -> usize {
        self.mean.len()
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let m = self.mean.len();
        if self.covariance.len() != m || self.covariance.iter().any(|r| r.len() != m) {
            return Err(Error::Config(format!("covariance must be {m}x{m}")));
        }
        let cov = DMatrix::from_fn(m, m, |i, j| self.covariance[i][j]);
        for i in 0..m {
            for j in 0..i {
                let (a, b) = (cov[(i, j)], cov[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300) {
                    return Err(Error::Config("covariance matrix is not symmetric".into()));
                }
            }
        }
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Config("covariance matrix is not positive definite".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("concentration mean must be finite".into()));
        }
        self.cholesky().map(|_| ())
    }
}

/// Lowest acceptance rate tolerated by the truncation sampler.
pub const MIN_TRUNCATION_ACCEPTANCE: f64 = 1e-4;

/// Draws `n` rows from the model, rejecting rows with a non-positive entry.
pub fn sample_concentrations<R: Rng + ?Sized>(
    model: &ConcentrationModel,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if model.mean.iter().any(|m| !m.is_finite()) {
        return Err(Error::Config("concentration mean must be finite".into()));
    }
    let chol = model.cholesky()?;
    let m = model.mean.len();
    let max_draws = ((n.max(1) as f64) / MIN_TRUNCATION_ACCEPTANCE).ceil() as u64;
    let mut rows = Vec::with_capacity(n);
    let mut draws = 0u64;
    let mut z = DVector::<f64>::zeros(m);
    while rows.len() < n {
        if draws >= max_draws {
            return Err(Error::Config(format!(
                "truncation too severe: {} of {draws} draws were positive",
                rows.len()
            )));
        }
        draws += 1;
        for k in 0..m {
            z[k] = rng.sample(StandardNormal);
        }
        let x = &chol * &z;
        let row: Vec<f64> = (0..m).map(|i| model.mean[i] + x[i]).collect();
        if row.iter().all(|&c| c > 0.0) {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Generating process of a synthetic benchmark problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub true_params: KineticParams<f64>,
    pub effect_types: Vec<EffectType>,
    /// Observations per dataset.
    pub n_samples: usize,
    pub noise_std: f64,
    pub concentrations: ConcentrationModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.true_params.validate()?;
        let m = self.true_params.n_metabolites();
        if self.effect_types.len() != m || self.concentrations.n_metabolites() != m {
            return Err(Error::Config(format!(
                "scenario `{}`: {} effect types and a {}-dimensional concentration model for {m} metabolites",
                self.name,
                self.effect_types.len(),
                self.concentrations.n_metabolites()
            )));
        }
        for (i, e) in self.effect_types.iter().enumerate() {
            let (rho, mu) = (self.true_params.rho[i], self.true_params.mu[i]);
            if !e.matches(rho, mu) {
                return Err(Error::Config(format!(
                    "scenario `{}`: metabolite {} is {e:?} but has rho = {rho}, mu = {mu}",
                    self.name,
                    i + 1
                )));
            }
        }
        if self.n_samples == 0 {
            return Err(Error::Config("scenario needs at least one observation".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!(
                "noise std {} must be non-negative",
                self.noise_std
            )));
        }
        self.concentrations.validate()
    }

    pub fn n_metabolites(&self) -> usize {
        self.true_params.n_metabolites()
    }

    /// The same scenario restricted to its first `m` metabolites.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n_metabolites() {
            return Err(Error::Config(format!(
                "cannot keep {m} of {} metabolites",
                self.n_metabolites()
            )));
        }
        let covariance = self.concentrations.covariance[..m]
            .iter()
            .map(|r| r[..m].to_vec())
            .collect();
        Ok(Self {
            name: format!("{}-m{m}", self.name),
            true_params: KineticParams::new(
                self.true_params.rho[..m].to_vec(),
                self.true_params.mu[..m].to_vec(),
                self.true_params.alpha,
            )?,
            effect_types: self.effect_types[..m].to_vec(),
            n_samples: self.n_samples,
            noise_std: self.noise_std,
            concentrations: ConcentrationModel {
                mean: self.concentrations.mean[..m].to_vec(),
                covariance,
            },
        })
    }
}

/// The twelve-metabolite reference problem: four neutral, three activation,
/// two inhibition and two double-component effects, `alpha = 1000`,
/// noise variance `1e-4`, `N = 20`, concentrations with mean 0.4.
pub fn table1_scenario() -> Scenario {
    use EffectType::*;
    let effects = vec![
        (Activation, 0.610, 0.0),
        (Inhibition, 0.0, 30.370),
        (DoubleComponent, 0.790, 1.550),
        (Neutral, 0.0, 0.0),
        (DoubleComponent, 0.490, 0.280),
        (Neutral, 0.0, 0.0),
        (Activation, 0.370, 0.0),
        (Neutral, 0.0, 0.0),
        (Activation, 0.760, 0.0),
        (Inhibition, 0.0, 0.012),
        (Neutral, 0.0, 0.0),
        (Neutral, 0.0, 0.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(TABLE1_COVARIANCE_SEED);
    let concentrations = ConcentrationModel::from_spectrum(vec![0.4; 12], TABLE1_EIGEN_MIN, TABLE1_EIGEN_MAX, &mut rng)
        .expect("reference spectrum is valid");
    Scenario {
        name: "table1".into(),
        true_params: KineticParams {
            rho: effects.iter().map(|e| e.1).collect(),
            mu: effects.iter().map(|e| e.2).collect(),
            alpha: 1000.0,
        },
        effect_types: effects.iter().map(|e| e.0).collect(),
        n_samples: 20,
        noise_std: 0.01,
        concentrations,
    }
}

/// One activation effect `2 c / (c + 0.5)`, noiseless, concentrations spread over (0, 2].
pub fn single_activation_scenario() -> Scenario {
    Scenario {
        name: "single-activation".into(),
        true_params: KineticParams {
            rho: vec![0.5],
            mu: vec![0.0],
            alpha: 2.0,
        },
        effect_types: vec![EffectType::Activation],
        n_samples: 20,
        noise_std: 0.0,
        concentrations: ConcentrationModel::isotropic(vec![0.6], 0.16),
    }
}

/// Built-in scenario by name.
pub fn named_scenario(name: &str) -> Result<Scenario> {
    match name {
        "table1" => Ok(table1_scenario()),
        "single-activation" => Ok(single_activation_scenario()),
        other => match other.strip_prefix("table1-m").and_then(|m| m.parse::<usize>().ok()) {
            Some(m) => table1_scenario().truncated(m),
            None => Err(Error::Config(format!(
                "unknown scenario `{other}` (expected table1, table1-m<k> or single-activation)"
            ))),
        },
    }
}

/// Draws a dataset `y(t) = w(c(t)) + e(t)` from the scenario.
pub fn generate<T: Scalar, R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Dataset<T>> {
    scenario.validate()?;
    let rows = sample_concentrations(&scenario.concentrations, scenario.n_samples, rng)?;
    let p = &scenario.true_params;
    let rates = rows
        .iter()
        .map(|c| {
            let w = p.alpha * modulation_product(c, &p.rho, &p.mu);
            if scenario.noise_std > 0.0 {
                w + scenario.noise_std * rng.sample::<f64, _>(StandardNormal)
            } else {
                w
            }
        })
        .map(T::lit)
        .collect();
    let rows = rows.into_iter().map(|r| r.into_iter().map(T::lit).collect()).collect();
    Dataset::new(rows, rates, Some(T::lit(scenario.noise_std)))
}
