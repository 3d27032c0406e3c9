//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::load_spec;
use crate::error::{Result, SrError};
use crate::experiments::{bench_experiment, optimality_experiment, rho_sweep_experiment, ExperimentSpec};
use crate::output::{self, git_describe, write_file, write_json, Manifest};
use crate::pipeline::{recover, Method, RecoverOptions};
use crate::signal_model::{ClusterConfig, SpikeTrain};
use crate::validation::run_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const THREADS_ENV: &str = "SPIKE_SR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "spike-sr", version, about = "Decimated super-resolution of clustered spike trains")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the generated spike train and cluster partition as JSON.
    Gen(IoArgs),
    /// Score every admissible decimation rate.
    SweepRho(IoArgs),
    /// Run one recovery and print the result as JSON.
    Recover {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the first entry of `methods` (default edp).
        #[arg(long)]
        method: Option<String>,
    },
    /// Error amplification factors over an SRF grid.
    Optimality(IoArgs),
    /// Method comparison and runtime scaling.
    Bench(IoArgs),
    /// Run the property suite.
    Validate {
        /// Where to write the report and any counterexamples.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct IoArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Run with `argv` (program name first) and return the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        pool = pool.num_threads(n.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_FAILED;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SrError::Config(_) => EXIT_USAGE,
                _ => EXIT_FAILED,
            }
        }
    }
}

fn spec_for(path: &Path, seed: Option<u64>) -> Result<ExperimentSpec> {
    let mut spec = load_spec(path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

#[derive(Serialize)]
struct Generated {
    spike: SpikeTrain,
    cluster: Option<ClusterConfig>,
    delta: f64,
}

#[derive(Serialize)]
struct Timing {
    wall_s: f64,
}

fn finish<R: Serialize>(
    dir: &Path,
    command: &str,
    spec: &ExperimentSpec,
    summary: &R,
    files: &[&str],
    start: Instant,
) -> Result<()> {
    let manifest = Manifest {
        command,
        spec,
        git_describe: git_describe(),
        seed: spec.seed,
        summary,
        files: files.iter().map(|s| s.to_string()).collect(),
    };
    write_json(dir, "manifest.json", &manifest)?;
    write_json(
        dir,
        "timing.json",
        &Timing {
            wall_s: start.elapsed().as_secs_f64(),
        },
    )
}

fn dispatch(cli: &CliConfig) -> Result<i32> {
    let start = Instant::now();
    match &cli.command {
        Command::Gen(io) => {
            let spec = spec_for(&io.config, cli.seed)?;
            let delta = spec.resolved_delta();
            let (spike, cluster) = spec.build_spike(delta)?;
            write_json(&io.out, "spike.json", &Generated { spike, cluster, delta })?;
            finish(&io.out, "gen", &spec, &(), &["spike.json"], start)?;
        }
        Command::SweepRho(io) => {
            let spec = spec_for(&io.config, cli.seed)?;
            let table = rho_sweep_experiment(&spec)?;
            write_file(&io.out, "rho_sweep.csv", &output::rho_sweep_csv(&table))?;
            write_file(&io.out, "rho_sweep_timing.csv", &output::rho_sweep_timing_csv(&table))?;
            finish(&io.out, "sweep-rho", &spec, &table.summary, &["rho_sweep.csv", "rho_sweep_timing.csv"], start)?;
        }
        Command::Recover { config, method } => {
            let spec = spec_for(config, cli.seed)?;
            let method = match method {
                Some(name) => Method::parse(name)
                    .ok_or_else(|| SrError::Config(format!("unknown method `{name}`")))?,
                None => spec.methods.first().copied().unwrap_or(Method::Edp),
            };
            let delta = spec.resolved_delta();
            let (spike, _) = spec.build_spike(delta)?;
            let oracle = spec.oracle(spike.clone(), spec.seed)?;
            let opts = RecoverOptions {
                delta: Some(delta),
                shift_fit: spec.shift_fit,
                ..Default::default()
            };
            let mut result = recover(&oracle, spec.num_nodes(), spec.num_clusters(), method, &opts)?;
            result.attach_truth(&spike, spec.epsilon, spec.omega)?;
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &result)?;
            writeln!(stdout)?;
        }
        Command::Optimality(io) => {
            let spec = spec_for(&io.config, cli.seed)?;
            let table = optimality_experiment(&spec)?;
            write_file(&io.out, "optimality.csv", &output::optimality_csv(&table))?;
            finish(&io.out, "optimality", &spec, &table.summary, &["optimality.csv"], start)?;
        }
        Command::Bench(io) => {
            let spec = spec_for(&io.config, cli.seed)?;
            let table = bench_experiment(&spec)?;
            write_file(&io.out, "bench.csv", &output::bench_csv(&table))?;
            write_file(&io.out, "bench_timing.csv", &output::bench_timing_csv(&table))?;
            write_file(&io.out, "complexity_timing.csv", &output::complexity_timing_csv(&table))?;
            finish(
                &io.out,
                "bench",
                &spec,
                &(),
                &["bench.csv", "bench_timing.csv", "complexity_timing.csv"],
                start,
            )?;
        }
        Command::Validate { out } => {
            let report = run_suite(cli.seed.unwrap_or(0))?;
            for p in &report.properties {
                let tag = match (p.passed, p.gating) {
                    (true, _) => "PASS",
                    (false, true) => "FAIL",
                    (false, false) => "INFO",
                };
                println!("{tag} {}: {}", p.name, p.detail);
            }
            if let Some(dir) = out {
                write_json(dir, "validate.json", &report)?;
            }
            return Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED });
        }
    }
    Ok(EXIT_OK)
}
