use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use mmc_core::ingest::{read_pharaoh_corpus, AlignmentSet, ParallelDocument};
use mmc_core::model::{validate_document, Document};
use mmc_core::projection::{apply_corrections, project_document, projection_stats_report, CorrectionRecord, ProjectionResult};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::io::{read_records, require_distinct, require_inputs, write_docs, write_records, ReportSink};

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Parallel documents, one `{source, targets, utterance_map}` record per line
    #[arg(long, value_name = "PATH")]
    pub parallel: PathBuf,
    /// Pharaoh `i-j` alignments, one line per mapped utterance pair, scenes in input order
    #[arg(long, value_name = "PATH", required_unless_present = "identity_alignment")]
    pub alignments: Option<PathBuf>,
    /// Link token i to token i in every mapped pair instead of reading alignments
    #[arg(long, conflicts_with = "alignments")]
    pub identity_alignment: bool,
    /// Target language tag [default: config `lang`, else zh]
    #[arg(long)]
    pub lang: Option<String>,
    /// Projection results, one record per document (input to `serve` and `stats projection`)
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write the projected target documents here
    #[arg(long, value_name = "PATH")]
    pub documents: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CorrectionsCommand {
    /// Apply a correction log to projection results and write corrected documents
    Apply(CorrectionsApplyArgs),
}

#[derive(Debug, Args)]
pub struct CorrectionsApplyArgs {
    /// Projection results written by `project`
    #[arg(long, value_name = "PATH")]
    pub projections: PathBuf,
    /// Correction log, one record per line, keyed by target doc_id
    #[arg(long, value_name = "PATH")]
    pub log: PathBuf,
    /// Corrected target documents
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn check_parallel(p: &ParallelDocument, lenient: bool) -> Result<()> {
    p.validate()?;
    if lenient {
        return Ok(());
    }
    for doc in std::iter::once(&p.source).chain(p.targets.values()) {
        let v = validate_document(doc);
        if let Some(first) = v.first() {
            bail!("document {}: {} violation(s), first: {first}", doc.doc_id, v.len());
        }
    }
    Ok(())
}

pub fn project(args: ProjectArgs, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    let mut inputs: Vec<&Path> = vec![&args.parallel];
    inputs.extend(args.alignments.as_deref());
    require_inputs(inputs.iter().copied())?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    outputs.extend(args.documents.as_deref());
    require_distinct(&inputs, &outputs)?;
    let lang = cfg.lang(args.lang)?;

    let parallels: Vec<ParallelDocument> = read_records(&args.parallel)?;
    for (i, p) in parallels.iter().enumerate() {
        check_parallel(p, cfg.lenient).with_context(|| format!("{} line {}", args.parallel.display(), i + 1))?;
    }
    let alignments: Vec<AlignmentSet> = match &args.alignments {
        Some(path) => read_pharaoh_corpus(path, &parallels, &lang).with_context(|| format!("reading {}", path.display()))?,
        None => parallels.iter().map(|p| AlignmentSet::identity(p, &lang)).collect::<Result<_, _>>()?,
    };
    let results: Vec<ProjectionResult> = parallels
        .par_iter()
        .zip(alignments.par_iter())
        .map(|(p, a)| project_document(p, a, &lang).with_context(|| format!("projecting {}", p.source.doc_id)))
        .collect::<Result<_>>()?;

    write_records(&results, &args.out)?;
    if let Some(path) = &args.documents {
        let docs: Vec<Document> = results.iter().map(|r| r.target_doc.clone()).collect();
        write_docs(&docs, path)?;
    }
    sink.emit(&projection_stats_report(&results, &[]).table())
}

/// Corrections grouped by target document, rejecting unknown documents.
fn group_log(log: Vec<CorrectionRecord>, known: &BTreeSet<&str>) -> Result<BTreeMap<String, Vec<CorrectionRecord>>> {
    let mut by_doc: BTreeMap<String, Vec<CorrectionRecord>> = BTreeMap::new();
    for (i, r) in log.into_iter().enumerate() {
        if !known.contains(r.doc_id.as_str()) {
            return Err(anyhow!("correction log line {}: unknown document {}", i + 1, r.doc_id));
        }
        by_doc.entry(r.doc_id.clone()).or_default().push(r);
    }
    Ok(by_doc)
}

pub fn corrections(cmd: CorrectionsCommand, _cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    let CorrectionsCommand::Apply(args) = cmd;
    require_inputs([args.projections.as_path(), args.log.as_path()])?;
    require_distinct(&[&args.projections, &args.log], &[&args.out])?;

    let results: Vec<ProjectionResult> = read_records(&args.projections)?;
    let log: Vec<CorrectionRecord> = read_records(&args.log)?;
    let known: BTreeSet<&str> = results.iter().map(|r| r.target_doc.doc_id.as_str()).collect();
    let by_doc = group_log(log.clone(), &known)?;

    let corrected: Vec<(Document, Vec<String>)> = results
        .par_iter()
        .map(|r| {
            let id = &r.target_doc.doc_id;
            let log: Vec<_> = by_doc.get(id).map_or_else(Vec::new, |v| v.iter().map(|c| c.correction.clone()).collect());
            let out = apply_corrections(r, &log).with_context(|| format!("document {id}"))?;
            let warnings = out.warnings.iter().map(|w| format!("{id}: {w}")).collect();
            Ok((out.document, warnings))
        })
        .collect::<Result<_>>()?;
    for (_, warnings) in &corrected {
        for w in warnings {
            eprintln!("warning: {w}");
        }
    }
    let docs: Vec<Document> = corrected.into_iter().map(|(d, _)| d).collect();
    write_docs(&docs, &args.out)?;
    sink.emit(&projection_stats_report(&results, &log).table())
}
