use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use mmc_core::analysis::{partition_by_speakers, SpeakerBucket};
use mmc_core::ingest::{assemble_three_way, AssembleConfig, FilterReport, UtteranceMapRecord};
use mmc_core::model::{Document, SplitPolicy};
use mmc_core::projection::{projection_stats_report, CorrectionRecord, ProjectionResult};
use mmc_core::table::Table;

use crate::config::RunConfig;
use crate::io::{key_value, read_docs, read_records, require_distinct, require_inputs, write_docs, write_records, write_text, ReportSink};

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Keep scenes present in every language with enough aligned utterances; report counts per stage
    Assemble(AssembleArgs),
    /// Projection and correction counts per split
    Projection(ProjectionArgs),
    /// Partition documents by number of distinct speakers
    Speakers(SpeakersArgs),
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Source-language scenes (documents with `episode` and `scene` metadata)
    #[arg(long, value_name = "PATH")]
    pub source: PathBuf,
    /// Target scenes as LANG=PATH; repeat per language
    #[arg(long = "target", value_name = "LANG=PATH", value_parser = key_value, required = true)]
    pub targets: Vec<(String, String)>,
    /// Utterance alignments as LANG=PATH, one `{episode, scene, map}` record per scene; repeat per language
    #[arg(long = "map", value_name = "LANG=PATH", value_parser = key_value, required = true)]
    pub maps: Vec<(String, String)>,
    /// Minimum fraction of source utterances aligned in every language [default: config `min_aligned_fraction`, else 0.5]
    #[arg(long)]
    pub min_aligned_fraction: Option<f64>,
    /// Kept scenes as parallel documents
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Full filter report as JSON, including the outcome of every scene
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectionArgs {
    /// Projection results written by `project`
    #[arg(long, value_name = "PATH")]
    pub projections: PathBuf,
    /// Correction log to count additions, deletions and modifications from
    #[arg(long, value_name = "PATH")]
    pub corrections: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpeakersArgs {
    /// Documents to partition
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Write one file per bucket here (speakers_le1.jsonl, speakers_2.jsonl, speakers_gt2.jsonl)
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

pub fn stats(cmd: StatsCommand, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    match cmd {
        StatsCommand::Assemble(a) => assemble(a, cfg, sink),
        StatsCommand::Projection(a) => {
            let mut inputs: Vec<&Path> = vec![&a.projections];
            inputs.extend(a.corrections.as_deref());
            require_inputs(inputs)?;
            let results: Vec<ProjectionResult> = read_records(&a.projections)?;
            let log: Vec<CorrectionRecord> = match &a.corrections {
                Some(p) => read_records(p)?,
                None => Vec::new(),
            };
            sink.emit(&projection_stats_report(&results, &log).table())
        }
        StatsCommand::Speakers(a) => speakers(a, cfg, sink),
    }
}

fn filter_table(r: &FilterReport) -> Table {
    let mut t = Table::new(["stage", "episodes", "scenes"]);
    t.push(["source".to_string(), r.source_episodes.to_string(), r.source_scenes.to_string()]);
    for (lang, c) in &r.two_way {
        t.push([format!("with {lang}"), c.episodes.to_string(), c.scenes.to_string()]);
    }
    t.push(["three-way".to_string(), r.three_way.episodes.to_string(), r.three_way.scenes.to_string()]);
    t.push(["dropped empty".to_string(), "-".into(), r.dropped_empty.to_string()]);
    t.push([format!("dropped aligned<{}", r.threshold), "-".into(), r.dropped_misaligned.to_string()]);
    t.push(["kept".to_string(), r.kept.episodes.to_string(), r.kept.scenes.to_string()]);
    t
}

fn assemble(a: AssembleArgs, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    let target_paths: Vec<PathBuf> = a.targets.iter().map(|(_, p)| PathBuf::from(p)).collect();
    let map_paths: Vec<PathBuf> = a.maps.iter().map(|(_, p)| PathBuf::from(p)).collect();
    let mut inputs: Vec<&Path> = vec![&a.source];
    inputs.extend(target_paths.iter().map(PathBuf::as_path));
    inputs.extend(map_paths.iter().map(PathBuf::as_path));
    require_inputs(inputs.iter().copied())?;
    let mut outputs: Vec<&Path> = vec![&a.out];
    outputs.extend(a.report.as_deref());
    require_distinct(&inputs, &outputs)?;
    let min_aligned_fraction = match a.min_aligned_fraction {
        Some(f) => f,
        None => cfg.file.get("min_aligned_fraction")?.unwrap_or(AssembleConfig::default().min_aligned_fraction),
    };
    if !(0.0..=1.0).contains(&min_aligned_fraction) {
        return Err(crate::io::usage(format!("min-aligned-fraction {min_aligned_fraction} is outside [0, 1]")));
    }

    let source = read_docs(&a.source, cfg.lenient)?;
    let mut targets = BTreeMap::new();
    for ((lang, _), path) in a.targets.iter().zip(&target_paths) {
        targets.insert(lang.clone(), read_docs(path, cfg.lenient)?);
    }
    let mut maps = BTreeMap::new();
    for ((lang, _), path) in a.maps.iter().zip(&map_paths) {
        maps.insert(lang.clone(), read_records::<UtteranceMapRecord>(path)?);
    }
    let (parallel, report) =
        assemble_three_way(source, targets, maps, AssembleConfig { min_aligned_fraction }).context("assembling corpus")?;
    write_records(&parallel, &a.out)?;
    if let Some(p) = &a.report {
        write_text(&format!("{}\n", serde_json::to_string_pretty(&report)?), p)?;
    }
    sink.emit(&filter_table(&report))
}

fn bucket_file(b: SpeakerBucket) -> &'static str {
    match b {
        SpeakerBucket::AtMostOne => "speakers_le1.jsonl",
        SpeakerBucket::Two => "speakers_2.jsonl",
        SpeakerBucket::MoreThanTwo => "speakers_gt2.jsonl",
    }
}

fn speakers(a: SpeakersArgs, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    require_inputs([a.input.as_path()])?;
    let docs = read_docs(&a.input, cfg.lenient)?;
    let buckets = partition_by_speakers(&docs);
    let mut t = Table::new(["speakers", "documents", "mentions", "clusters"]);
    for (b, ds) in &buckets {
        let mut clusters = 0;
        for d in ds {
            clusters += d.anchor_clustering(SplitPolicy::DropSplit).with_context(|| format!("document {}", d.doc_id))?.len();
        }
        let mentions: usize = ds.iter().map(|d: &Document| d.mentions.len()).sum();
        t.push([b.label().to_string(), ds.len().to_string(), mentions.to_string(), clusters.to_string()]);
    }
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (b, ds) in &buckets {
            write_docs(ds, &dir.join(bucket_file(*b)))?;
        }
    }
    sink.emit(&t)
}
