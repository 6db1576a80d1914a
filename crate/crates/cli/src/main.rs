//! `fresco` command-line entry point.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fresco_core::experiment::{
    emit_report, run_experiment, seed_from_env, sensitivity_sweep, summarize, ExperimentSpec, InfraSpec, RawRecords,
    ReportFormat, RunFailure, FAILURES_FILE,
};
use fresco_core::infra::InfraConfig;

#[derive(Debug, Parser)]
#[command(name = "fresco", version, about = "Edge offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Infrastructure map tools.
    Infra {
        #[command(subcommand)]
        command: InfraCommand,
    },
    /// Run every engine of an experiment spec and write raw files and a summary.
    Run(RunArgs),
    /// Run the weight grid of an experiment spec.
    Sweep(RunArgs),
    /// Fold a raw results directory into a summary table.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
enum InfraCommand {
    /// Cluster cell sites, place edge servers and attach availability traces.
    Build(BuildArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Cell-site CSV, or `synth:blobs=B,per_blob=N`.
    #[arg(long)]
    cells: String,
    /// Availability trace file, or `synth:ratio=a..b`.
    #[arg(long)]
    traces: String,
    #[arg(long, default_value_t = 30)]
    clusters: usize,
    /// Total edge servers; defaults to three per cell.
    #[arg(long)]
    edge_nodes: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory; defaults to `results/<experiment name>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    raw: PathBuf,
    /// csv, md or json.
    #[arg(long, default_value = "md")]
    format: ReportFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_infra(args: &BuildArgs) -> Result<()> {
    let spec = InfraSpec {
        seed: args.seed,
        sites: args.cells.clone(),
        traces: args.traces.clone(),
        config: InfraConfig {
            clusters: args.clusters,
            edge_nodes: args.edge_nodes.unwrap_or(3 * args.clusters),
            ..InfraConfig::default()
        },
    };
    let map = spec.build(Path::new(".")).context("building infrastructure map")?;
    map.save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "{} cells, {} edge nodes -> {}",
        map.cells.len(),
        map.edge_nodes().count(),
        args.out.display()
    );
    Ok(())
}

fn load_spec(args: &RunArgs) -> Result<(fresco_core::experiment::ResolvedExperiment, PathBuf)> {
    let spec = ExperimentSpec::load(&args.spec).with_context(|| format!("loading {}", args.spec.display()))?;
    let base = args.spec.parent().unwrap_or(Path::new("."));
    let resolved = spec.resolve(base, seed_from_env()?)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| Path::new("results").join(&resolved.name));
    Ok((resolved, out))
}

fn report_failures(dir: &Path, failures: &[RunFailure]) -> bool {
    if failures.is_empty() {
        return true;
    }
    eprintln!(
        "{} run(s) failed; see {}",
        failures.len(),
        dir.join(FAILURES_FILE).display()
    );
    false
}

fn run(args: &RunArgs) -> Result<bool> {
    let (exp, out) = load_spec(args)?;
    let result = run_experiment(&exp, Some(&out), args.jobs)?;
    print!("{}", emit_report(&result.summary, ReportFormat::Markdown));
    eprintln!("raw files and summary written to {}", out.display());
    Ok(report_failures(&out, &result.failures))
}

fn sweep(args: &RunArgs) -> Result<bool> {
    let (exp, out) = load_spec(args)?;
    let grid = sensitivity_sweep(&exp, Some(&out), args.jobs)?;
    print!("{}", emit_report(&grid, ReportFormat::Markdown));
    eprintln!("sweep tables written to {}", out.display());
    Ok(report_failures(&out, &grid.failures))
}

fn report(args: &ReportArgs) -> Result<()> {
    if !args.raw.is_dir() {
        bail!("{} is not a directory", args.raw.display());
    }
    let raw = RawRecords::read(&args.raw)?;
    let text = emit_report(&summarize(&raw), args.format);
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Infra {
            command: InfraCommand::Build(args),
        } => build_infra(args).map(|()| true),
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Report(args) => report(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
