mod common;

use common::rng;
use monod_kinetics::datagen::{generate, named_scenario, single_activation_scenario};
use monod_kinetics::em::SIGMA_MIN;
use monod_kinetics::metrics::fit_rate;
use monod_kinetics::{
    run_em, Dataset32, Dataset64, EmConfig, Error, KnownValue, ParamSlot, SamplerConfig, SamplerMode,
};

fn table2(mode: SamplerMode) -> EmConfig {
    EmConfig {
        sampler: SamplerConfig {
            mode,
            ..SamplerConfig::default()
        },
        ..EmConfig::default()
    }
}

fn short(mode: SamplerMode, iterations: usize, samples: usize, burnin: usize) -> EmConfig {
    EmConfig {
        iterations,
        sampler: SamplerConfig {
            samples,
            burnin,
            mode,
            ..SamplerConfig::default()
        },
        ..EmConfig::default()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn one_iteration_runs_exactly_l_cycles() {
    let data: Dataset64 = generate(&named_scenario("table1-m3").unwrap(), &mut rng(1)).unwrap();
    for mode in [SamplerMode::Classical, SamplerMode::Enforced] {
        let out = run_em(&data, &short(mode, 1, 37, 0), &mut rng(2)).unwrap();
        assert_eq!(out.gibbs_cycles, 37);
        assert_eq!(out.trace.len(), 1);
    }
}

#[test]
fn burnin_applies_to_the_first_iteration_only() {
    let data: Dataset64 = generate(&named_scenario("table1-m2").unwrap(), &mut rng(1)).unwrap();
    let out = run_em(&data, &short(SamplerMode::Enforced, 4, 10, 25), &mut rng(2)).unwrap();
    assert_eq!(out.gibbs_cycles, 25 + 4 * 10);
    let mut every = short(SamplerMode::Enforced, 4, 10, 25);
    every.burnin_first_only = false;
    assert_eq!(run_em(&data, &every, &mut rng(2)).unwrap().gibbs_cycles, 4 * 35);
}

#[test]
fn trace_has_one_record_per_iteration() {
    let data: Dataset64 = generate(&named_scenario("table1-m3").unwrap(), &mut rng(3)).unwrap();
    let out = run_em(&data, &short(SamplerMode::Enforced, 6, 10, 10), &mut rng(4)).unwrap();
    let iterations: Vec<usize> = out.trace.records.iter().map(|r| r.iteration).collect();
    assert_eq!(iterations, (1..=6).collect::<Vec<_>>());
    let last = out.trace.last().unwrap();
    assert_eq!(last.params, out.params);
    assert_eq!(last.hyper, out.hyper);
    assert_eq!(last.sigma_e, out.sigma_e);
    for r in &out.trace.records {
        assert!(r.hyper.validate().is_ok());
        assert!(r.sigma_e >= SIGMA_MIN);
        assert!((0.0..=1.0).contains(&r.acceptance_rate));
        assert_eq!(r.slot_acceptance.len(), 6);
    }
    for w in out.trace.records.windows(2) {
        assert!(w[1].elapsed_seconds >= w[0].elapsed_seconds);
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let data: Dataset64 = generate(&named_scenario("table1-m4").unwrap(), &mut rng(5)).unwrap();
    let cfg = short(SamplerMode::Enforced, 5, 20, 20);
    let strip = |mut o: monod_kinetics::EmOutcome64| {
        for r in &mut o.trace.records {
            r.elapsed_seconds = 0.0;
        }
        o
    };
    let a = strip(run_em(&data, &cfg, &mut rng(6)).unwrap());
    let b = strip(run_em(&data, &cfg, &mut rng(6)).unwrap());
    assert_eq!(a, b);
    assert_ne!(a.params, strip(run_em(&data, &cfg, &mut rng(7)).unwrap()).params);
}

#[test]
fn noiseless_single_activation_is_recovered() {
    let scenario = single_activation_scenario();
    let truth = scenario.true_params.rho[0];
    for seed in 0..5 {
        let data: Dataset64 = generate(&scenario, &mut rng(seed)).unwrap();
        let mut cfg = table2(SamplerMode::Enforced);
        cfg.known = vec![KnownValue {
            slot: ParamSlot::mu(0),
            value: 0.0,
        }];
        let out = run_em(&data, &cfg, &mut rng(100 + seed)).unwrap();
        assert_eq!(out.params.mu[0], 0.0);
        let rho = out.params.rho[0];
        assert!((rho - truth).abs() <= 0.1 * truth, "seed {seed}: rho = {rho}");
        let fit = fit_rate(&data, &out.params).unwrap();
        assert!(fit >= 99.0, "seed {seed}: fit = {fit}");
    }
}

#[test]
fn four_metabolite_reduction_reaches_ninety_percent() {
    let scenario = named_scenario("table1-m4").unwrap();
    let fits: Vec<f64> = (0..20)
        .map(|seed| {
            let data: Dataset64 = generate(&scenario, &mut rng(seed)).unwrap();
            let out = run_em(&data, &table2(SamplerMode::Enforced), &mut rng(1000 + seed)).unwrap();
            fit_rate(&data, &out.params).unwrap()
        })
        .collect();
    let med = median(fits.clone());
    assert!(med >= 90.0, "median fit {med}, fits {fits:?}");
}

#[test]
fn fit_improves_over_the_run_on_noiseless_data() {
    let mut scenario = named_scenario("table1-m4").unwrap();
    scenario.noise_std = 0.0;
    let runs = 20u64;
    let improved = (0..runs)
        .filter(|&seed| {
            let data: Dataset64 = generate(&scenario, &mut rng(seed)).unwrap();
            let out = run_em(&data, &short(SamplerMode::Enforced, 30, 100, 500), &mut rng(500 + seed)).unwrap();
            let first = out.trace.records[0].fit_w.unwrap();
            let last = out.trace.last().unwrap().fit_w.unwrap();
            last >= first
        })
        .count();
    assert!(improved as u64 * 5 >= runs * 4, "{improved} of {runs} runs improved");
}

#[test]
fn row_order_does_not_change_the_estimate() {
    let data: Dataset64 = generate(&named_scenario("table1-m3").unwrap(), &mut rng(9)).unwrap();
    let order: Vec<usize> = (0..data.len()).rev().collect();
    let shuffled = data.permuted(&order);
    let cfg = short(SamplerMode::Enforced, 3, 20, 20);
    let a = run_em(&data, &cfg, &mut rng(10)).unwrap();
    let b = run_em(&shuffled, &cfg, &mut rng(10)).unwrap();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * x.abs().max(1.0);
    for (x, y) in a
        .params
        .rho
        .iter()
        .chain(&a.params.mu)
        .zip(b.params.rho.iter().chain(&b.params.mu))
    {
        assert!(close(*x, *y), "{x} vs {y}");
    }
    assert!(close(a.params.alpha, b.params.alpha));
    assert!(close(a.sigma_e, b.sigma_e));
}

#[test]
fn single_precision_run() {
    let data: Dataset32 = generate(&named_scenario("table1-m3").unwrap(), &mut rng(11)).unwrap();
    let out = run_em(&data, &short(SamplerMode::Enforced, 10, 50, 100), &mut rng(12)).unwrap();
    assert!(out.params.validate().is_ok());
    let fit = fit_rate(&data, &out.params).unwrap();
    assert!(fit.is_finite() && fit > 50.0, "fit {fit}");
}

#[test]
fn configuration_errors() {
    let data: Dataset64 = generate(&named_scenario("table1-m2").unwrap(), &mut rng(1)).unwrap();
    let mut cfg = short(SamplerMode::Enforced, 1, 1, 0);
    assert!(matches!(run_em(&data, &cfg, &mut rng(1)), Err(Error::Config(_))));
    cfg.sampler.samples = 10;
    cfg.iterations = 0;
    assert!(matches!(run_em(&data, &cfg, &mut rng(1)), Err(Error::Config(_))));
    cfg.iterations = 1;
    cfg.known = vec![KnownValue {
        slot: ParamSlot::rho(5),
        value: 0.0,
    }];
    assert!(matches!(run_em(&data, &cfg, &mut rng(1)), Err(Error::Config(_))));
}

#[test]
fn overflowing_likelihood_fails_initialization() {
    let rows: Vec<Vec<f64>> = (1..=5).map(|k| vec![0.1 * k as f64]).collect();
    let y = (1..=5).map(|k| if k % 2 == 0 { 1e300 } else { -1e300 }).collect();
    let data = Dataset64::new(rows, y, None).unwrap();
    let err = run_em(&data, &short(SamplerMode::Enforced, 1, 5, 0), &mut rng(1)).unwrap_err();
    assert!(matches!(err, Error::Initialization(_)), "{err:?}");
}
