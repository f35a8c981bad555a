//! `ffp experiment`: Monte Carlo suites from a JSON config.
//!
//! A suite shares one generator, grid and seed across a set of labelled
//! estimators; each estimator produces a tidy trajectory-summary CSV in
//! the output directory, plus a single `manifest.json` echoing the config.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use ffp_core::harness::{run_monte_carlo, EstimatorSpec, ExperimentConfig, GeneratorSpec};

use crate::cli_io::{create_output, write_manifest, Manifest};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub name: String,
    pub generator: GeneratorSpec,
    pub grid_m: usize,
    pub replications: usize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    pub seed: u64,
    /// Label -> estimator; each produces `<label>.csv`.
    pub estimators: BTreeMap<String, EstimatorSpec>,
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Suite config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the config's replication count (for quick runs).
    #[arg(long)]
    replications: Option<usize>,
}

pub fn run(args: ExperimentArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::usage(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut suite: SuiteConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::usage(format!("bad config {}: {e}", args.config.display()))
    })?;
    if let Some(r) = args.replications {
        suite.replications = r;
    }
    if suite.estimators.is_empty() {
        return Err(CliError::usage("config lists no estimators"));
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let started = chrono::Utc::now();
    let t0 = Instant::now();
    for (label, estimator) in &suite.estimators {
        let cfg = ExperimentConfig {
            generator: suite.generator.clone(),
            estimator: estimator.clone(),
            grid_m: suite.grid_m,
            replications: suite.replications,
            record_stride: suite.record_stride,
            seed: suite.seed,
        };
        let summary = run_monte_carlo(&cfg).map_err(|e| {
            let mut err = CliError::from(e);
            err.message = format!("{}: {}", args.config.display(), err.message);
            err
        })?;
        for (stream, msg) in &summary.failures {
            eprintln!("warning: {label}: replication on stream {stream} failed: {msg}");
        }
        let path = args.out_dir.join(format!("{label}.csv"));
        let w = create_output(&path)?;
        summary.write_csv(w)?;
    }
    let manifest = Manifest {
        config: serde_json::to_value(&suite)
            .map_err(|e| CliError::usage(format!("config echo failed: {e}")))?,
        seed: suite.seed,
        start_time: started.to_rfc3339(),
        runtime_seconds: t0.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_manifest(&args.out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}
