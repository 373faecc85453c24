use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use mmc_core::analysis::{fallback_heads, head_lemma_baseline, HeadedMention};
use mmc_core::ingest::parse_conll;
use mmc_core::metrics::{Averaging, CorpusScorer, EvalOptions, EvalPair, MetricScore};
use mmc_core::model::{Document, SplitPolicy};
use mmc_core::table::Table;
use mmc_core::Evaluation;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link_clusters;
use crate::config::RunConfig;
use crate::io::{read_docs, read_records, require_distinct, require_inputs, write_docs, ReportSink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Conll,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Gold documents
    #[arg(long, value_name = "PATH")]
    pub key: PathBuf,
    /// System documents, matched to the key by doc_id
    #[arg(long, value_name = "PATH")]
    pub response: PathBuf,
    /// Format of both files
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
    /// Remove singleton clusters from key and response before scoring [default: config `drop_singletons`, else off]
    #[arg(long)]
    pub drop_singletons: bool,
    /// Average per-document scores instead of pooling counts
    #[arg(long = "macro")]
    pub macro_average: bool,
    /// Use each mention's first antecedent only, instead of dropping split-antecedent links
    #[arg(long)]
    pub first_antecedent: bool,
    /// Also print one row per document
    #[arg(long)]
    pub per_doc: bool,
}

#[derive(Debug, Subcommand)]
pub enum BaselineCommand {
    /// Link every two mentions whose heads share a lemma
    HeadLemma(HeadLemmaArgs),
}

#[derive(Debug, Args)]
pub struct HeadLemmaArgs {
    /// Documents whose mentions are clustered
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Externally computed heads, one `{doc_id, heads: [{id, head_token, head_lemma}]}` record per document [default: last alphabetic token, lowercased]
    #[arg(long, value_name = "PATH")]
    pub heads: Option<PathBuf>,
    /// Documents with baseline links
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeadsRecord {
    pub doc_id: String,
    pub heads: Vec<HeadedMention>,
}

fn read_any(path: &Path, format: Format, lenient: bool) -> Result<Vec<Document>> {
    match format {
        Format::Jsonl => read_docs(path, lenient),
        Format::Conll => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_conll(&text).with_context(|| format!("reading {}", path.display()))
        }
    }
}

fn metric_row(name: &str, s: &MetricScore<f64>) -> Vec<String> {
    vec![name.to_string(), format!("{:.2}", 100.0 * s.recall), format!("{:.2}", 100.0 * s.precision), format!("{:.2}", 100.0 * s.f1)]
}

pub fn metric_table(e: &Evaluation) -> Table {
    let mut t = Table::new(["metric", "recall", "precision", "f1"]);
    t.push(metric_row("MUC", &e.muc));
    t.push(metric_row("B3", &e.b_cubed));
    t.push(metric_row("CEAFphi4", &e.ceaf_phi4));
    t.push(["CoNLL".to_string(), "-".into(), "-".into(), format!("{:.2}", 100.0 * e.conll.f1)]);
    t.push(metric_row("mentions", &e.mentions));
    t
}

pub fn score(args: ScoreArgs, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    require_inputs([args.key.as_path(), args.response.as_path()])?;
    let key = read_any(&args.key, args.format, cfg.lenient)?;
    let response = read_any(&args.response, args.format, cfg.lenient)?;
    let mut by_id: BTreeMap<&str, &Document> = BTreeMap::new();
    for d in &response {
        if by_id.insert(&d.doc_id, d).is_some() {
            return Err(anyhow!("response has document {} twice", d.doc_id));
        }
    }
    if let Some(extra) = response.iter().find(|d| !key.iter().any(|k| k.doc_id == d.doc_id)) {
        return Err(anyhow!("response document {} is not in the key", extra.doc_id));
    }
    let opts = EvalOptions {
        split_policy: if args.first_antecedent { SplitPolicy::FirstAntecedent } else { SplitPolicy::DropSplit },
        drop_singletons: args.drop_singletons || cfg.file.get("drop_singletons")?.unwrap_or(false),
    };
    let pairs: Vec<EvalPair<_>> = key
        .par_iter()
        .map(|k| {
            let r = by_id.get(k.doc_id.as_str()).ok_or_else(|| anyhow!("key document {} has no response", k.doc_id))?;
            EvalPair::from_documents(k, r, opts).with_context(|| format!("document {}", k.doc_id))
        })
        .collect::<Result<_>>()?;
    let mut scorer = CorpusScorer::<f64>::new();
    for p in &pairs {
        scorer.add(p);
    }
    let averaging = if args.macro_average { Averaging::Macro } else { Averaging::Micro };
    let mut tables = vec![metric_table(&scorer.evaluation(averaging))];
    if args.per_doc {
        let mut t = Table::new(["doc", "muc", "b3", "ceafphi4", "conll"]);
        for (k, e) in key.iter().zip(scorer.per_document()) {
            t.push([
                k.doc_id.clone(),
                format!("{:.2}", 100.0 * e.muc.f1),
                format!("{:.2}", 100.0 * e.b_cubed.f1),
                format!("{:.2}", 100.0 * e.ceaf_phi4.f1),
                format!("{:.2}", 100.0 * e.conll.f1),
            ]);
        }
        tables.push(t);
    }
    sink.emit_all(&tables)
}

pub fn baseline(cmd: BaselineCommand, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    let BaselineCommand::HeadLemma(args) = cmd;
    let mut inputs: Vec<&Path> = vec![&args.input];
    inputs.extend(args.heads.as_deref());
    require_inputs(inputs.iter().copied())?;
    require_distinct(&inputs, &[&args.out])?;

    let docs = read_docs(&args.input, cfg.lenient)?;
    let heads: BTreeMap<String, Vec<HeadedMention>> = match &args.heads {
        Some(p) => read_records::<HeadsRecord>(p)?.into_iter().map(|r| (r.doc_id, r.heads)).collect(),
        None => BTreeMap::new(),
    };
    let out: Vec<Document> = docs
        .par_iter()
        .map(|d| {
            let h = heads.get(&d.doc_id).cloned().unwrap_or_else(|| fallback_heads(d));
            link_clusters(d, &head_lemma_baseline(&h))
        })
        .collect();
    write_docs(&out, &args.out)?;

    let mut t = Table::new(["documents", "mentions", "clusters", "non_singleton"]);
    let (mut mentions, mut clusters, mut linked) = (0, 0, 0);
    for d in &out {
        let c = d.anchor_clustering(SplitPolicy::DropSplit)?;
        mentions += c.member_count();
        clusters += c.len();
        linked += c.clusters().iter().filter(|c| c.len() > 1).count();
    }
    t.push([out.len(), mentions, clusters, linked].map(|n| n.to_string()));
    sink.emit(&t)
}
