use monod_kinetics::bench::{quantile, replicate_dataset, run_benchmark, BenchmarkConfig};
use monod_kinetics::datagen::named_scenario;
use monod_kinetics::io::parse_csv;
use monod_kinetics::{EmConfig, SamplerConfig, SamplerMode};

fn config(scenario: &str, replicates: usize) -> BenchmarkConfig {
    BenchmarkConfig {
        scenario: named_scenario(scenario).unwrap(),
        replicates,
        modes: vec![SamplerMode::Classical, SamplerMode::Enforced],
        em: EmConfig {
            iterations: 5,
            sampler: SamplerConfig {
                samples: 20,
                burnin: 30,
                ..SamplerConfig::default()
            },
            ..EmConfig::default()
        },
        seed: 7,
        jobs: 2,
    }
}

#[test]
fn one_replicate_two_modes_gives_two_rows() {
    let report = run_benchmark(&config("table1-m3", 1)).unwrap();
    assert_eq!(report.results.len(), 2);
    let (header, rows) = parse_csv(&report.replicates_csv().unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    let mode = header.iter().position(|h| h == "mode").unwrap();
    let modes: Vec<&str> = rows.iter().map(|r| r[mode].as_str()).collect();
    assert_eq!(modes, ["classical", "enforced"]);
}

#[test]
fn aggregate_median_matches_replicate_rows() {
    let report = run_benchmark(&config("table1-m4", 7)).unwrap();
    let (header, rows) = parse_csv(&report.replicates_csv().unwrap()).unwrap();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for mode in [SamplerMode::Classical, SamplerMode::Enforced] {
        let mut fits: Vec<f64> = rows
            .iter()
            .filter(|r| r[col("mode")] == mode.as_str())
            .map(|r| r[col("fit_w")].parse().unwrap())
            .collect();
        fits.sort_by(f64::total_cmp);
        assert_eq!(fits.len(), 7);
        let q = report.summary_for(mode, "fit_w").unwrap();
        assert_eq!(q.median, fits[3]);
        assert_eq!(q.min, fits[0]);
        assert_eq!(q.max, fits[6]);
        assert_eq!(quantile(&fits, 0.25), Some(q.q1));
    }
}

#[test]
fn modes_share_the_replicate_dataset() {
    let cfg = config("table1-m3", 3);
    let a = replicate_dataset(&cfg, 1).unwrap();
    assert_eq!(a, replicate_dataset(&cfg, 1).unwrap());
    assert_ne!(a, replicate_dataset(&cfg, 2).unwrap());
}

#[test]
fn parallelism_does_not_change_results() {
    let mut cfg = config("table1-m3", 4);
    let a = run_benchmark(&cfg).unwrap();
    cfg.jobs = 1;
    let b = run_benchmark(&cfg).unwrap();
    let strip = |csv: String| {
        let (h, rows) = parse_csv(&csv).unwrap();
        let t = h.iter().position(|c| c == "elapsed_seconds").unwrap();
        rows.into_iter()
            .map(|mut r| {
                r.remove(t);
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(a.replicates_csv().unwrap()), strip(b.replicates_csv().unwrap()));
}

#[test]
fn failed_replicates_are_recorded() {
    let mut cfg = config("table1-m2", 2);
    // Rates near f64::MAX make the initial likelihood overflow.
    cfg.scenario.true_params.alpha = 1e300;
    let report = run_benchmark(&cfg).unwrap();
    assert_eq!(report.results.len(), 4);
    assert!(report.results.iter().all(|r| r.outcome.is_err()));
    let (header, rows) = parse_csv(&report.replicates_csv().unwrap()).unwrap();
    let status = header.iter().position(|h| h == "status").unwrap();
    assert!(rows.iter().all(|r| r[status] == "failed"));
    assert!(report.summary_for(SamplerMode::Enforced, "fit_w").is_none());
}

#[test]
fn written_files_round_trip() {
    let report = run_benchmark(&config("table1-m2", 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    for (file, text) in [
        ("replicates.csv", report.replicates_csv().unwrap()),
        ("summary.csv", report.summary_csv().unwrap()),
        ("trajectory.csv", report.trajectory_csv().unwrap()),
    ] {
        let on_disk = std::fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(on_disk, text);
        let (header, rows) = parse_csv(&on_disk).unwrap();
        assert!(rows.iter().all(|r| r.len() == header.len()));
        for cell in rows.iter().flatten() {
            if let Ok(x) = cell.parse::<f64>() {
                if x.is_finite() && cell.contains('e') {
                    assert_eq!(monod_kinetics::io::format_value(x), *cell);
                }
            }
        }
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["results"].as_array().unwrap().len(), 4);
}
