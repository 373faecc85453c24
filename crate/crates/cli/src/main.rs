//! `mmc-toolkit`: projection, adjudication, scoring and corpus reports.
//!
//! Exit status is 0 on success, 1 when input data is rejected and 2 when
//! the invocation itself is wrong.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::commands::{loss, merge, names, project, score, serve, stats};
use crate::config::{ConfigFile, RunConfig, SEED_ENV};
use crate::io::{ReportSink, UsageError};

#[derive(Debug, Parser)]
#[command(name = "mmc-toolkit", version, about = "Cross-lingual coreference data toolkit", propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Config file of `key = value` lines (seed, jobs, lenient, lang, min_aligned_fraction, drop_singletons)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed [default: $MMC_TOOLKIT_SEED, else config `seed`, else 20230710]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-document work [default: available cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Accept documents that violate model invariants instead of rejecting them [default: off]
    #[arg(long, global = true)]
    lenient: bool,
    /// Also write the report table as TSV to this path
    #[arg(long, global = true, value_name = "PATH")]
    tsv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project source mentions onto a target language through word alignments
    Project(project::ProjectArgs),
    /// Replay correction logs over projections
    #[command(subcommand)]
    Corrections(project::CorrectionsCommand),
    /// Merge two annotators' answers and queue the disagreements
    Merge(merge::MergeArgs),
    /// Export the disagreement queue or apply adjudication decisions
    #[command(subcommand)]
    Adjudicate(merge::AdjudicateCommand),
    /// Score a response against a key (MUC, B3, CEAF-phi4, CoNLL, mentions)
    Score(score::ScoreArgs),
    /// Rule-based baselines
    #[command(subcommand)]
    Baseline(score::BaselineCommand),
    /// Corpus filtering, projection and speaker-count reports
    #[command(subcommand)]
    Stats(stats::StatsCommand),
    /// Replace speaker names with sampled names, or undo a replacement
    ReplaceNames(names::ReplaceNamesArgs),
    /// Self-test of the loss kernels: hand values, limits and gradients
    LossCheck(loss::LossCheckArgs),
    /// Start the review service
    Serve(serve::ServeArgs),
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig::resolve(cli.global.seed, std::env::var(SEED_ENV).ok(), cli.global.jobs, cli.global.lenient, file)?;
    if let Some(n) = cfg.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let sink = ReportSink { tsv: cli.global.tsv.clone() };
    match cli.command {
        Command::Project(a) => project::project(a, &cfg, &sink),
        Command::Corrections(c) => project::corrections(c, &cfg, &sink),
        Command::Merge(a) => merge::merge(a, &sink),
        Command::Adjudicate(c) => merge::adjudicate(c, &sink),
        Command::Score(a) => score::score(a, &cfg, &sink),
        Command::Baseline(c) => score::baseline(c, &cfg, &sink),
        Command::Stats(c) => stats::stats(c, &cfg, &sink),
        Command::ReplaceNames(a) => names::replace_names(a, &cfg, &sink),
        Command::LossCheck(a) => loss::loss_check(a, &cfg, &sink),
        Command::Serve(a) => serve::serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
