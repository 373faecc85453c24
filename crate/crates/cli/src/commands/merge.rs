use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Subcommand};
use mmc_core::merge::{agreement_report, apply_decisions, merge_two_way, AdjudicationDecision, AnnotationTriplet, MergeState};
use mmc_core::model::MentionId;
use mmc_core::table::Table;
use mmc_review::AdjudicationSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{read_records, require_distinct, require_inputs, write_records, ReportSink};

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Double-annotated queries, one `{doc_id, triplets}` record per document
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Merge state per document
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Disagreement queue, one query per line
    #[arg(long, value_name = "PATH")]
    pub queue: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AdjudicateCommand {
    /// Write the queries still awaiting a decision
    Export(ExportArgs),
    /// Apply decisions and report agreement against the final clusters
    Apply(ApplyArgs),
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Double-annotated queries, one `{doc_id, triplets}` record per document
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Decisions already made; their queries are left out of the queue
    #[arg(long, value_name = "PATH")]
    pub decisions: Option<PathBuf>,
    /// Disagreement queue, one query per line
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    /// Double-annotated queries, one `{doc_id, triplets}` record per document
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Decisions, one `{doc_id, query, choice}` record per line; later lines win (the review service log is accepted as is)
    #[arg(long, value_name = "PATH")]
    pub decisions: PathBuf,
    /// Final merge state per document
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// One queued query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueRecord {
    pub doc_id: String,
    #[serde(flatten)]
    pub triplet: AnnotationTriplet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedRecord {
    pub doc_id: String,
    pub state: MergeState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLine {
    pub doc_id: String,
    #[serde(flatten)]
    pub decision: AdjudicationDecision,
}

fn merge_all(sets: &[AdjudicationSet]) -> Result<Vec<MergeState>> {
    sets.par_iter()
        .map(|s| merge_two_way(&s.triplets).with_context(|| format!("document {}", s.doc_id)))
        .collect()
}

fn summary(sets: &[AdjudicationSet], states: &[MergeState]) -> Table {
    let mut t = Table::new(["doc", "queries", "resolved", "not_mention", "queued", "clusters"]);
    let mut total = [0usize; 5];
    for (s, m) in sets.iter().zip(states) {
        let row = [s.triplets.len(), m.resolved.len(), m.non_mentions.len(), m.disagreements.len(), m.clusters.len()];
        for (acc, v) in total.iter_mut().zip(row) {
            *acc += v;
        }
        t.push(std::iter::once(s.doc_id.clone()).chain(row.iter().map(usize::to_string)));
    }
    t.push(std::iter::once("total".to_string()).chain(total.iter().map(usize::to_string)));
    t
}

fn queue(sets: &[AdjudicationSet], states: &[MergeState], decided: &BTreeSet<(String, MentionId)>) -> Vec<QueueRecord> {
    sets.iter()
        .zip(states)
        .flat_map(|(s, m)| {
            m.disagreements
                .iter()
                .filter(|t| !decided.contains(&(s.doc_id.clone(), t.query.clone())))
                .map(|t| QueueRecord { doc_id: s.doc_id.clone(), triplet: t.clone() })
        })
        .collect()
}

pub fn merge(args: MergeArgs, sink: &ReportSink) -> Result<()> {
    require_inputs([args.input.as_path()])?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    outputs.extend(args.queue.as_deref());
    require_distinct(&[&args.input], &outputs)?;

    let sets: Vec<AdjudicationSet> = read_records(&args.input)?;
    let states = merge_all(&sets)?;
    let merged: Vec<MergedRecord> =
        sets.iter().zip(&states).map(|(s, m)| MergedRecord { doc_id: s.doc_id.clone(), state: m.clone() }).collect();
    write_records(&merged, &args.out)?;
    if let Some(path) = &args.queue {
        write_records(&queue(&sets, &states, &BTreeSet::new()), path)?;
    }
    sink.emit(&summary(&sets, &states))
}

fn read_decisions(path: &Path, sets: &[AdjudicationSet]) -> Result<BTreeMap<String, BTreeMap<MentionId, AdjudicationDecision>>> {
    let known: BTreeSet<&str> = sets.iter().map(|s| s.doc_id.as_str()).collect();
    let mut out: BTreeMap<String, BTreeMap<MentionId, AdjudicationDecision>> = BTreeMap::new();
    for (i, d) in read_records::<DecisionLine>(path)?.into_iter().enumerate() {
        if !known.contains(d.doc_id.as_str()) {
            return Err(anyhow!("{} line {}: unknown document {}", path.display(), i + 1, d.doc_id));
        }
        out.entry(d.doc_id).or_default().insert(d.decision.query.clone(), d.decision);
    }
    Ok(out)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub fn adjudicate(cmd: AdjudicateCommand, sink: &ReportSink) -> Result<()> {
    match cmd {
        AdjudicateCommand::Export(args) => {
            let mut inputs: Vec<&Path> = vec![&args.input];
            inputs.extend(args.decisions.as_deref());
            require_inputs(inputs.iter().copied())?;
            require_distinct(&inputs, &[&args.out])?;
            let sets: Vec<AdjudicationSet> = read_records(&args.input)?;
            let states = merge_all(&sets)?;
            let decided: BTreeSet<(String, MentionId)> = match &args.decisions {
                Some(p) => read_decisions(p, &sets)?
                    .into_iter()
                    .flat_map(|(doc, ds)| ds.into_keys().map(move |q| (doc.clone(), q)))
                    .collect(),
                None => BTreeSet::new(),
            };
            write_records(&queue(&sets, &states, &decided), &args.out)?;
            sink.emit(&summary(&sets, &states))
        }
        AdjudicateCommand::Apply(args) => {
            require_inputs([args.input.as_path(), args.decisions.as_path()])?;
            require_distinct(&[&args.input, &args.decisions], &[&args.out])?;
            let sets: Vec<AdjudicationSet> = read_records(&args.input)?;
            let states = merge_all(&sets)?;
            let decisions = read_decisions(&args.decisions, &sets)?;
            let finals: Vec<MergeState> = sets
                .par_iter()
                .zip(states.par_iter())
                .map(|(s, m)| {
                    let ds: Vec<AdjudicationDecision> = decisions.get(&s.doc_id).map_or_else(Vec::new, |d| d.values().cloned().collect());
                    apply_decisions(m, &ds).with_context(|| format!("document {}", s.doc_id))
                })
                .collect::<Result<_>>()?;

            let mut t = Table::new(["doc", "queries", "open", "kappa", "muc_a1", "muc_a2", "conll_a1", "conll_a2", "conll_a1_a2"]);
            for (s, f) in sets.iter().zip(&finals) {
                let r = agreement_report::<f64>(&s.triplets, &f.clusters);
                let kappa = if r.kappa.undefined { "n/a".to_string() } else { format!("{:.3}", r.kappa.value) };
                t.push([
                    s.doc_id.clone(),
                    r.queries.to_string(),
                    f.disagreements.len().to_string(),
                    kappa,
                    pct(r.first.muc.f1),
                    pct(r.second.muc.f1),
                    pct(r.first.conll.f1),
                    pct(r.second.conll.f1),
                    pct(r.between.conll.f1),
                ]);
            }
            let merged: Vec<MergedRecord> =
                sets.iter().zip(finals).map(|(s, m)| MergedRecord { doc_id: s.doc_id.clone(), state: m }).collect();
            write_records(&merged, &args.out)?;
            sink.emit(&t)
        }
    }
}
