//! Path checks, record I/O and report output.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mmc_core::ingest::{read_document_jsonl, read_jsonl, write_document_jsonl, write_jsonl, Strictness};
use mmc_core::model::Document;
use mmc_core::table::Table;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Bad invocation rather than bad data; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Fails with a usage error unless every path exists.
pub fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(usage(format!("input {} does not exist", p.display())));
        }
    }
    Ok(())
}

/// Fails with a usage error if an output path would overwrite an input.
pub fn require_distinct(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    for o in outputs {
        if inputs.iter().any(|i| same_file(i, o)) {
            return Err(usage(format!("output {} would overwrite an input", o.display())));
        }
    }
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn strictness(lenient: bool) -> Strictness {
    if lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    }
}

pub fn read_docs(path: &Path, lenient: bool) -> Result<Vec<Document>> {
    read_document_jsonl(path, strictness(lenient)).with_context(|| format!("reading {}", path.display()))
}

pub fn write_docs(docs: &[Document], path: &Path) -> Result<()> {
    write_document_jsonl(docs, path).with_context(|| format!("writing {}", path.display()))
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_records<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    write_jsonl(records, path).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Where a report goes: pretty table on stdout, TSV to a file if asked.
#[derive(Debug, Clone, Default)]
pub struct ReportSink {
    pub tsv: Option<PathBuf>,
}

impl ReportSink {
    pub fn emit(&self, table: &Table) -> Result<()> {
        print!("{}", table.to_pretty());
        if let Some(p) = &self.tsv {
            write_text(&table.to_tsv(), p)?;
        }
        Ok(())
    }

    /// Several tables; the TSV file gets them separated by blank lines.
    pub fn emit_all(&self, tables: &[Table]) -> Result<()> {
        for (i, t) in tables.iter().enumerate() {
            if i > 0 {
                println!();
            }
            print!("{}", t.to_pretty());
        }
        if let Some(p) = &self.tsv {
            let text: Vec<String> = tables.iter().map(Table::to_tsv).collect();
            write_text(&text.join("\n"), p)?;
        }
        Ok(())
    }
}

/// `KEY=VALUE` pair from a repeated flag.
pub fn key_value(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected KEY=VALUE, got {s:?}")),
    }
}
