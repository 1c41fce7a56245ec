//! `strichartz`: measurement harness for space-time estimates of dispersive
//! flows on the cylinder. Every subcommand writes a CSV report plus a JSON
//! metadata sidecar (or one JSON document with `--format json`) into the
//! output directory, and exits nonzero when a `[check]` bound from the
//! config is violated.

mod commands;
mod config;
mod context;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{bilinear, flow, measure, ratio};
use context::Ctx;

#[derive(Parser)]
#[command(name = "strichartz", version, about = "dispersive estimate workbench")]
struct Cli {
    /// Config file (flat key = value with [section] headers)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for every ensemble draw
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and field dumps
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel cells (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report format: csv (with .meta.json sidecar) or json
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linear evolution: per-node mass and L4 slice, space-time norm, final field
    Evolve(flow::EvolveArgs),
    /// Ensemble-plus-refinement ratio ladder over the cutoff
    RatioSweep(ratio::RatioSweepArgs),
    /// Quadrilinear form on sparse random weights or a field file
    Quadform(measure::QuadformArgs),
    /// Annulus measures against the area-plus-slice bound
    Measure(measure::MeasureArgs),
    /// Random semi-algebraic corpus through the covering inequality
    LemmaCorpus(measure::LemmaCorpusArgs),
    /// Section suprema over the standard center samples
    PropCheck(measure::PropCheckArgs),
    /// Frozen two-regime bilinear scaling study
    BilinearSweep,
    /// Intersection-measure quotient grid for separated shells
    Eab(bilinear::EabArgs),
    /// Ascent from one seeded start, iteration trace and field dump
    Extremize(ratio::ExtremizeArgs),
    /// Split-step cubic solve with mass series and checkpoints
    Nls(flow::NlsArgs),
    /// Picard tower: difference norms and contraction factors
    Picard(flow::PicardArgs),
    /// Box-doubling stability gate with its controls
    Gate(ratio::GateArgs),
}

fn run(cli: Cli) -> Result<bool> {
    let ctx = Ctx::new(
        cli.config.as_deref(),
        cli.seed,
        cli.out,
        cli.threads,
        cli.format.as_deref(),
    )?;
    if let Some(t) = ctx.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Evolve(a) => flow::evolve_cmd(&ctx, a),
        Command::RatioSweep(a) => ratio::ratio_sweep_cmd(&ctx, a),
        Command::Quadform(a) => measure::quadform(&ctx, a),
        Command::Measure(a) => measure::measure(&ctx, a),
        Command::LemmaCorpus(a) => measure::lemma_corpus(&ctx, a),
        Command::PropCheck(a) => measure::prop_check_cmd(&ctx, a),
        Command::BilinearSweep => bilinear::bilinear_sweep(&ctx),
        Command::Eab(a) => bilinear::eab_cmd(&ctx, a),
        Command::Extremize(a) => ratio::extremize_cmd(&ctx, a),
        Command::Nls(a) => flow::nls_cmd(&ctx, a),
        Command::Picard(a) => flow::picard_cmd(&ctx, a),
        Command::Gate(a) => ratio::gate_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
