use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use monod_kinetics::bench::{replicate_rng, run_benchmark, BenchmarkConfig, StreamPurpose};
use monod_kinetics::datagen::{generate, named_scenario, Scenario};
use monod_kinetics::io::{load_dataset, save_dataset, write_json};
use monod_kinetics::report::write_fit_outputs;
use monod_kinetics::{run_em, Dataset64, Error, ErrorKind, FitReport, KineticParams64, Result, SamplerMode};

mod config;

use config::{ModeArg, RunArgs};

/// Bayesian estimation of Monod reaction kinetics by Monte-Carlo EM.
#[derive(Debug, Parser)]
#[command(name = "monod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a synthetic dataset from a built-in scenario
    Simulate(RunArgs),
    /// Estimate the kinetics of one dataset
    Fit(RunArgs),
    /// Compare sampler modes over many synthetic replicates
    Benchmark(RunArgs),
}

/// Written next to a simulated dataset as `<stem>.truth.json`.
#[derive(Debug, Serialize, Deserialize)]
struct Truth {
    scenario: String,
    seed: u64,
    n_samples: usize,
    noise_std: f64,
    true_params: KineticParams64,
}

fn truth_path(data: &Path) -> PathBuf {
    let stem = data
        .file_stem()
        .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    data.with_file_name(format!("{stem}.truth.json"))
}

fn scenario(args: &RunArgs, default: &str) -> Result<Scenario> {
    let mut s = named_scenario(args.scenario.as_deref().unwrap_or(default))?;
    if let Some(n) = args.n {
        if n == 0 {
            return Err(Error::Config("--n must be at least 1".into()));
        }
        s.n_samples = n;
    }
    Ok(s)
}

fn simulate(args: RunArgs) -> Result<()> {
    let scenario = scenario(&args, "table1")?;
    let seed = args.seed();
    let out = args.out.unwrap_or_else(|| PathBuf::from("data.csv"));
    // Same stream as replicate 0 of a benchmark with this seed.
    let data: Dataset64 = generate(&scenario, &mut replicate_rng(seed, 0, StreamPurpose::Data))?;
    save_dataset(&data, &out)?;
    write_json(
        &truth_path(&out),
        &Truth {
            scenario: scenario.name.clone(),
            seed,
            n_samples: scenario.n_samples,
            noise_std: scenario.noise_std,
            true_params: scenario.true_params,
        },
    )?;
    println!(
        "wrote {} ({} rows, {} metabolites)",
        out.display(),
        data.len(),
        data.n_metabolites()
    );
    Ok(())
}

fn fit(args: RunArgs) -> Result<()> {
    let path = args
        .data
        .clone()
        .ok_or_else(|| Error::Config("fit needs --data <CSV>".into()))?;
    let mode = match args.mode.unwrap_or(ModeArg::Enforced) {
        ModeArg::Classical => SamplerMode::Classical,
        ModeArg::Enforced => SamplerMode::Enforced,
        ModeArg::Both => return Err(Error::Config("fit runs a single mode: classical or enforced".into())),
    };
    if mode == SamplerMode::Classical && args.k_max.is_some() {
        log::warn!("--k-max is ignored in classical mode (one attempt per visit)");
    }
    let em = args.em_config(mode)?;
    let data: Dataset64 = load_dataset(&path)?;

    let truth_file = truth_path(&path);
    let truth = if truth_file.exists() {
        let text = std::fs::read_to_string(&truth_file).map_err(|e| Error::io(&truth_file, e))?;
        let t: Truth = serde_json::from_str(&text)?;
        if t.true_params.n_metabolites() == data.n_metabolites() {
            Some(t.true_params)
        } else {
            log::warn!(
                "ignoring {}: metabolite count does not match the dataset",
                truth_file.display()
            );
            None
        }
    } else {
        None
    };

    let seed = args.seed();
    let outcome = run_em(&data, &em, &mut replicate_rng(seed, 0, StreamPurpose::Estimation))?;
    let report = FitReport::evaluate(&data, &outcome.params, outcome.sigma_e, &outcome.trace, truth.as_ref())?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("fit-out"));
    write_fit_outputs(&out, mode, seed, &outcome, &report)?;
    println!(
        "{mode}: fit_w = {:.3} %, sigma_e = {:.4e}, {} EM iterations in {:.2} s -> {}",
        report.fit_w,
        report.sigma_e,
        outcome.trace.len(),
        report.elapsed_seconds,
        out.display()
    );
    Ok(())
}

fn benchmark(args: RunArgs) -> Result<()> {
    let modes = args.mode.unwrap_or(ModeArg::Both).modes();
    if modes == [SamplerMode::Classical] && args.k_max.is_some() {
        log::warn!("--k-max is ignored in classical mode (one attempt per visit)");
    }
    let config = BenchmarkConfig {
        scenario: scenario(&args, "table1")?,
        replicates: args.replicates.unwrap_or(100),
        em: args.em_config(SamplerMode::Enforced)?,
        modes,
        seed: args.seed(),
        jobs: args.jobs()?,
    };
    let report = run_benchmark(&config)?;
    let out = args.out.unwrap_or_else(|| PathBuf::from("bench-out"));
    report.write(&out)?;
    let failed = report.results.iter().filter(|r| r.outcome.is_err()).count();
    for &mode in &config.modes {
        if let Some(q) = report.summary_for(mode, "fit_w") {
            println!(
                "{mode}: fit_w median {:.3} % (q1 {:.3}, q3 {:.3}) over {} runs",
                q.median, q.q1, q.q3, q.count
            );
        }
    }
    if failed > 0 {
        eprintln!("warning: {failed} run(s) failed; see replicates.csv");
    }
    println!("reports written to {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a.resolve()?),
        Command::Fit(a) => fit(a.resolve()?),
        Command::Benchmark(a) => benchmark(a.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
