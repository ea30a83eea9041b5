mod common;

use common::rng;
use monod_kinetics::datagen::{
    generate, sample_concentrations, table1_scenario, ConcentrationModel, EffectType, Scenario,
};
use monod_kinetics::model::rate;
use monod_kinetics::{Dataset64, KineticParams64};
use proptest::prelude::*;

// Truncated-normal moments on (0, inf), computed with scipy.stats.truncnorm.
const MEAN_04_SD_01: (f64, f64) = (0.400_013_383_446_446_9, 0.099_973_228_627_991_3);
const MEAN_01_SD_01: (f64, f64) = (0.128_759_997_093_917_83, 0.079_352_774_732_620_76);

fn check_truncated_mean(mean: f64, (oracle_mean, oracle_sd): (f64, f64), seed: u64) {
    let n = 100_000;
    let model = ConcentrationModel::isotropic(vec![mean; 3], 0.01);
    let rows = sample_concentrations(&model, n, &mut rng(seed)).unwrap();
    let se = oracle_sd / (n as f64).sqrt();
    for k in 0..3 {
        let m = rows.iter().map(|r| r[k]).sum::<f64>() / n as f64;
        assert!(
            (m - oracle_mean).abs() < 3.0 * se,
            "coordinate {k}: {m} vs {oracle_mean} (se {se})"
        );
    }
}

#[test]
fn truncated_mean_matches_analytic_oracle() {
    check_truncated_mean(0.4, MEAN_04_SD_01, 1);
    check_truncated_mean(0.1, MEAN_01_SD_01, 2);
}

#[test]
fn noise_std_is_reproduced() {
    let mut s = table1_scenario();
    s.n_samples = 10_000;
    let data: Dataset64 = generate(&s, &mut rng(3)).unwrap();
    let residuals: Vec<f64> = data
        .rows()
        .zip(data.rates())
        .map(|(c, y)| y - rate(c, &s.true_params).unwrap())
        .collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((sd - s.noise_std).abs() <= 0.05 * s.noise_std, "sd {sd}");
}

#[test]
fn table1_scenario_matches_the_published_kinetics() {
    let s = table1_scenario();
    use EffectType::*;
    assert_eq!(
        s.effect_types,
        vec![
            Activation,
            Inhibition,
            DoubleComponent,
            Neutral,
            DoubleComponent,
            Neutral,
            Activation,
            Neutral,
            Activation,
            Inhibition,
            Neutral,
            Neutral
        ]
    );
    let rho = [0.610, 0.0, 0.790, 0.0, 0.490, 0.0, 0.370, 0.0, 0.760, 0.0, 0.0, 0.0];
    let mu = [0.0, 30.370, 1.550, 0.0, 0.280, 0.0, 0.0, 0.0, 0.0, 0.012, 0.0, 0.0];
    assert_eq!(s.true_params.rho, rho);
    assert_eq!(s.true_params.mu, mu);
    assert_eq!(s.true_params.alpha, 1000.0);
    assert_eq!(s.n_samples, 20);
    assert!((s.noise_std * s.noise_std - 1e-4).abs() < 1e-18);
    assert!(s.concentrations.mean.iter().all(|&m| m == 0.4));
}

#[test]
fn table1_data_shape() {
    let data: Dataset64 = generate(&table1_scenario(), &mut rng(1)).unwrap();
    assert_eq!(data.len(), 20);
    assert_eq!(data.n_metabolites(), 12);
    assert_eq!(data.noise_std(), Some(0.01));
}

#[test]
fn scenario_round_trips_through_json() {
    let s = table1_scenario();
    let text = serde_json::to_string(&s).unwrap();
    let back: Scenario = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
}

#[test]
fn neutral_scenario_gives_constant_rates() {
    let s = Scenario {
        name: "flat".into(),
        true_params: KineticParams64::neutral(3, 1.0),
        effect_types: vec![EffectType::Neutral; 3],
        n_samples: 50,
        noise_std: 0.0,
        concentrations: ConcentrationModel::isotropic(vec![0.4; 3], 0.05),
    };
    let data: Dataset64 = generate(&s, &mut rng(4)).unwrap();
    assert!(data.rates().iter().all(|&y| y == 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn concentrations_are_strictly_positive(
        seed in any::<u64>(),
        mean in 0.05f64..1.0,
        variance in 1e-4f64..0.5,
        m in 1usize..5,
    ) {
        let model = ConcentrationModel::isotropic(vec![mean; m], variance);
        let rows = sample_concentrations(&model, 200, &mut rng(seed)).unwrap();
        prop_assert_eq!(rows.len(), 200);
        prop_assert!(rows.iter().all(|r| r.len() == m && r.iter().all(|&c| c > 0.0)));
    }

    #[test]
    fn spectrum_covariance_is_spd(seed in any::<u64>(), m in 1usize..8) {
        let model = ConcentrationModel::from_spectrum(vec![0.4; m], 1e-3, 0.1, &mut rng(seed)).unwrap();
        prop_assert!(model.validate().is_ok());
        let trace: f64 = (0..m).map(|i| model.covariance[i][i]).sum();
        let want: f64 = (0..m)
            .map(|k| {
                let t = if m == 1 { 1.0 } else { k as f64 / (m - 1) as f64 };
                (1e-3f64.ln() + t * (0.1f64.ln() - 1e-3f64.ln())).exp()
            })
            .sum();
        prop_assert!((trace - want).abs() < 1e-12);
    }
}
