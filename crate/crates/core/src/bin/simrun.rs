//! `simrun`: runs policy × seed experiments and writes CSV/JSON reports.
//!
//! Exit codes: 0 success, 2 config error, 3 I/O error, 4 internal invariant
//! violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use laot_sim::defaults;
use laot_sim::harness::{
    env_seed, parse_config, parse_config_str, run_experiment, Emit, ExperimentSpec,
};
use laot_sim::{PolicyKind, Result, SimError};

#[derive(Debug, Parser)]
#[command(name = "simrun", version, about = "Edge model-cache simulator")]
struct Args {
    /// TOML config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Policy to run (repeatable): laot, fifo, lfu, cloud_only.
    #[arg(long = "policy")]
    policies: Vec<String>,

    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,

    /// Slots per run
    #[arg(long)]
    slots: Option<u64>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// csv, json or both.
    #[arg(long)]
    format: Option<String>,

    /// Print the policy comparison table.
    #[arg(long)]
    summary: bool,

    /// Worker threads; 0 means available parallelism.
    #[arg(long)]
    jobs: Option<usize>,

    /// Print the defaults table and exit (JSON with `--format json`).
    #[arg(long)]
    print_defaults: bool,
}

fn build_spec(args: &Args) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => parse_config(path)?,
        None => parse_config_str("", Path::new("<defaults>"), env_seed()?)?,
    };
    if !args.policies.is_empty() {
        spec.policies = args
            .policies
            .iter()
            .map(|p| p.parse::<PolicyKind>())
            .collect::<Result<_>>()?;
    }
    if !args.seeds.is_empty() {
        spec.seeds = args.seeds.clone();
    }
    if let Some(n) = args.slots {
        spec.base.workload.n_slots = n;
    }
    if let Some(out) = &args.out {
        spec.output_dir = out.clone();
    }
    if let Some(f) = &args.format {
        spec.emit = f.parse::<Emit>()?;
    }
    if let Some(j) = args.jobs {
        spec.jobs = j;
    }
    spec.validate()?;
    Ok(spec)
}

fn main_inner(args: Args) -> Result<()> {
    if args.print_defaults {
        match args.format.as_deref() {
            Some("json") => print!("{}", defaults::render_json()),
            Some(other) if other != "csv" && other != "both" => {
                return Err(SimError::InvalidArgument(format!(
                    "unknown format `{other}`"
                )))
            }
            _ => print!("{}", defaults::render_text()),
        }
        return Ok(());
    }
    let spec = build_spec(&args)?;
    let outcome = run_experiment(&spec)?;
    if args.summary {
        print!("{}", outcome.summary.render_text());
    }
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simrun: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
