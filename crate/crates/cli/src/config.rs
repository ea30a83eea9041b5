//! Run settings: defaults, an optional JSON file with flat keys, and command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use monod_kinetics::em::EmConfig;
use monod_kinetics::{Error, Result, SamplerConfig, SamplerMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Classical,
    Enforced,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> Vec<SamplerMode> {
        match self {
            ModeArg::Classical => vec![SamplerMode::Classical],
            ModeArg::Enforced => vec![SamplerMode::Enforced],
            ModeArg::Both => vec![SamplerMode::Classical, SamplerMode::Enforced],
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config file, then to defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct RunArgs {
    /// JSON file with the same keys as the long flags (underscores instead of dashes)
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Built-in scenario: table1, table1-m<k> or single-activation
    #[arg(long)]
    pub scenario: Option<String>,
    /// Dataset CSV with header c_1,...,c_m,y
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// EM iterations M
    #[arg(long)]
    pub em_iters: Option<usize>,
    /// Retained Gibbs cycles L per EM iteration
    #[arg(long)]
    pub gibbs_samples: Option<usize>,
    /// Burn-in cycles, first EM iteration only
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Attempt cap per parameter visit (enforced mode)
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Additive widening of the proposal log-std
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Concurrent replicates [default: available cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Observations per simulated dataset
    #[arg(long)]
    pub n: Option<usize>,
    /// Output file (simulate) or directory (fit, benchmark)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident: $($field:ident),*) => {
        $(if $src.$field.is_some() { $dst.$field = $src.$field; })*
    };
}

impl RunArgs {
    /// Reads `--config` if given and lets the flags override its values.
    pub fn resolve(self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let mut merged = read_config(&path)?;
        let flags = self;
        overlay!(merged, flags: scenario, data, mode, em_iters, gibbs_samples, burnin, k_max, delta, seed, replicates, jobs, n, out);
        merged.config = Some(path);
        Ok(merged)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn em_config(&self, mode: SamplerMode) -> Result<EmConfig> {
        let defaults = SamplerConfig::default();
        let config = EmConfig {
            iterations: self.em_iters.unwrap_or(EmConfig::default().iterations),
            sampler: SamplerConfig {
                samples: self.gibbs_samples.unwrap_or(defaults.samples),
                burnin: self.burnin.unwrap_or(defaults.burnin),
                k_max: self.k_max.unwrap_or(defaults.k_max),
                delta: self.delta.unwrap_or(defaults.delta),
                mode,
                ..defaults
            },
            ..EmConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn jobs(&self) -> Result<usize> {
        match self.jobs {
            Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
            Some(j) => Ok(j),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

fn read_config(path: &Path) -> Result<RunArgs> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
