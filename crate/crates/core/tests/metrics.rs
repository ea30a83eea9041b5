mod common;

use common::rng;
use monod_kinetics::datagen::{generate, named_scenario};
use monod_kinetics::metrics::{fit_rate, fit_trajectory};
use monod_kinetics::{run_em, Dataset64, EmConfig, FitReport, SamplerConfig};

fn config(iterations: usize) -> EmConfig {
    EmConfig {
        iterations,
        sampler: SamplerConfig {
            samples: 20,
            burnin: 20,
            ..SamplerConfig::default()
        },
        ..EmConfig::default()
    }
}

#[test]
fn single_iteration_gives_a_single_point() {
    let data: Dataset64 = generate(&named_scenario("table1-m3").unwrap(), &mut rng(1)).unwrap();
    let out = run_em(&data, &config(1), &mut rng(2)).unwrap();
    let t = fit_trajectory(&out.trace, &data).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].iteration, 1);
}

#[test]
fn trajectory_is_timed_and_ends_at_the_final_fit() {
    let data: Dataset64 = generate(&named_scenario("table1-m4").unwrap(), &mut rng(3)).unwrap();
    let out = run_em(&data, &config(8), &mut rng(4)).unwrap();
    let t = fit_trajectory(&out.trace, &data).unwrap();
    assert_eq!(t.len(), 8);
    assert!(t[0].elapsed_seconds > 0.0);
    for w in t.windows(2) {
        assert!(w[1].elapsed_seconds > w[0].elapsed_seconds);
    }
    assert_eq!(t.last().unwrap().fit_w, fit_rate(&data, &out.params).unwrap());
    for (p, r) in t.iter().zip(&out.trace.records) {
        assert_eq!(Some(p.fit_w), r.fit_w);
    }
}

#[test]
fn report_with_truth_has_per_metabolite_fits() {
    let s = named_scenario("table1-m5").unwrap();
    let data: Dataset64 = generate(&s, &mut rng(5)).unwrap();
    let out = run_em(&data, &config(5), &mut rng(6)).unwrap();
    let r = FitReport::evaluate(&data, &out.params, out.sigma_e, &out.trace, Some(&s.true_params)).unwrap();
    assert_eq!(r.fit_h.len(), 5);
    assert_eq!(r.lambda.len(), 5);
    assert!(r.fit_h.iter().all(|&f| f <= 100.0));
    assert!(r.lambda.iter().all(|&l| l > 0.0));
    assert_eq!(r.trajectory.len(), 5);
    assert_eq!(r.elapsed_seconds, out.trace.last().unwrap().elapsed_seconds);
    let blind = FitReport::evaluate(&data, &out.params, out.sigma_e, &out.trace, None).unwrap();
    assert!(blind.fit_h.is_empty());
    assert_eq!(blind.fit_w, r.fit_w);
}
