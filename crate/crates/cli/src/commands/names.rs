use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use mmc_core::analysis::{self,
    invert_names, mapping_from_tsv, mapping_to_tsv, parse_name_pool, plan_replacements,
};
use mmc_core::table::Table;

use crate::config::RunConfig;
use crate::io::{key_value, read_docs, require_distinct, require_inputs, usage, write_docs, write_text, ReportSink};

#[derive(Debug, Args)]
pub struct ReplaceNamesArgs {
    /// Documents to rename
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Renamed documents
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Scene/original/replacement TSV; written when replacing, read with --invert
    #[arg(long, value_name = "PATH")]
    pub mapping: PathBuf,
    /// Undo a replacement using --mapping instead of sampling new names
    #[arg(long)]
    pub invert: bool,
    /// Name pool as GROUP=PATH, one name per line; repeat per group
    #[arg(long = "pool", value_name = "GROUP=PATH", value_parser = key_value, required_unless_present = "invert")]
    pub pools: Vec<(String, String)>,
    /// Speaker-to-group TSV (speaker, group)
    #[arg(long, value_name = "PATH")]
    pub groups: Option<PathBuf>,
    /// Group for speakers missing from --groups [default: none, unmapped speakers are an error]
    #[arg(long, value_name = "GROUP")]
    pub default_group: Option<String>,
    /// Also write the full plan (seed, pools, groups, per-scene choices) as JSON
    #[arg(long, value_name = "PATH")]
    pub plan: Option<PathBuf>,
}

fn read_groups(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((speaker, group)) = line.split_once('\t') else {
            bail!("{} line {}: expected speaker<TAB>group", path.display(), i + 1);
        };
        out.insert(speaker.trim().to_string(), group.trim().to_string());
    }
    Ok(out)
}

pub fn replace_names(a: ReplaceNamesArgs, cfg: &RunConfig, sink: &ReportSink) -> Result<()> {
    if a.invert {
        require_inputs([a.input.as_path(), a.mapping.as_path()])?;
        require_distinct(&[&a.input, &a.mapping], &[&a.out])?;
        let docs = read_docs(&a.input, cfg.lenient)?;
        let text = std::fs::read_to_string(&a.mapping).with_context(|| format!("reading {}", a.mapping.display()))?;
        let mapping = mapping_from_tsv(&text).with_context(|| format!("reading {}", a.mapping.display()))?;
        write_docs(&invert_names(&docs, &mapping), &a.out)?;
        let mut t = Table::new(["documents", "mappings"]);
        t.push([docs.len().to_string(), mapping.len().to_string()]);
        return sink.emit(&t);
    }

    let pool_paths: Vec<PathBuf> = a.pools.iter().map(|(_, p)| PathBuf::from(p)).collect();
    let mut inputs: Vec<&Path> = vec![&a.input];
    inputs.extend(pool_paths.iter().map(PathBuf::as_path));
    inputs.extend(a.groups.as_deref());
    require_inputs(inputs.iter().copied())?;
    let mut outputs: Vec<&Path> = vec![&a.out, &a.mapping];
    outputs.extend(a.plan.as_deref());
    require_distinct(&inputs, &outputs)?;
    if a.groups.is_none() && a.default_group.is_none() {
        return Err(usage("give --groups, --default-group or both"));
    }

    let docs = read_docs(&a.input, cfg.lenient)?;
    let mut pools = BTreeMap::new();
    for ((group, _), path) in a.pools.iter().zip(&pool_paths) {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        pools.insert(group.clone(), parse_name_pool(&text));
    }
    let mut groups = match &a.groups {
        Some(p) => read_groups(p)?,
        None => BTreeMap::new(),
    };
    if let Some(g) = &a.default_group {
        for d in &docs {
            for s in d.speakers() {
                groups.entry(s.to_string()).or_insert_with(|| g.clone());
            }
        }
    }

    let plan = plan_replacements(&docs, &pools, &groups, cfg.seed)?;
    let (renamed, mapping) = analysis::replace_names(&docs, &plan)?;
    write_docs(&renamed, &a.out)?;
    write_text(&mapping_to_tsv(&mapping), &a.mapping)?;
    if let Some(p) = &a.plan {
        write_text(&format!("{}\n", serde_json::to_string_pretty(&plan)?), p)?;
    }
    let mut t = Table::new(["documents", "speakers_renamed", "seed"]);
    t.push([docs.len().to_string(), mapping.len().to_string(), cfg.seed.to_string()]);
    sink.emit(&t)
}
