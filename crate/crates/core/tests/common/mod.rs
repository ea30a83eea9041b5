#![allow(dead_code)]

use monod_kinetics::model::rate;
use monod_kinetics::{Dataset64, KineticParams64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Noiseless dataset of `n` rows with concentrations uniform in `[lo, hi]`.
pub fn noiseless(params: &KineticParams64, n: usize, lo: f64, hi: f64, seed: u64) -> Dataset64 {
    let mut r = rng(seed);
    let m = params.n_metabolites();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| r.random_range(lo..hi)).collect())
        .collect();
    let y = rows.iter().map(|c| rate(c, params).unwrap()).collect();
    Dataset64::new(rows, y, Some(0.0)).unwrap()
}

/// Same as [`noiseless`] plus Gaussian noise of standard deviation `noise`.
pub fn noisy(params: &KineticParams64, n: usize, noise: f64, seed: u64) -> Dataset64 {
    let clean = noiseless(params, n, 0.05, 1.5, seed);
    let mut r = rng(seed ^ 0xABCD);
    let rows: Vec<Vec<f64>> = clean.rows().map(<[f64]>::to_vec).collect();
    let y = clean
        .rates()
        .iter()
        .map(|w| w + noise * r.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    Dataset64::new(rows, y, Some(noise)).unwrap()
}
