use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{AlignmentSet, IngestError, ParallelDocument, UtteranceAlignment};

/// Parses one Pharaoh line: whitespace-separated `i-j` pairs; blank means no links.
pub fn parse_pharaoh_line(line: &str, line_no: usize) -> Result<BTreeSet<(usize, usize)>, IngestError> {
    line.split_whitespace()
        .map(|tok| {
            let bad = || IngestError::Parse {
                line: line_no,
                message: format!("malformed alignment pair {tok:?}"),
            };
            let (s, t) = tok.split_once('-').ok_or_else(bad)?;
            Ok((s.parse().map_err(|_| bad())?, t.parse().map_err(|_| bad())?))
        })
        .collect()
}

pub fn format_pharaoh_line(links: &BTreeSet<(usize, usize)>) -> String {
    links.iter().map(|(s, t)| format!("{s}-{t}")).collect::<Vec<_>>().join(" ")
}

/// Consumes one line per mapped utterance pair of `parallel`, starting at
/// `lines[offset]`. Returns the alignment set and the next offset.
fn take_document(
    lines: &[&str],
    offset: usize,
    parallel: &ParallelDocument,
    lang: &str,
) -> Result<(AlignmentSet, usize), IngestError> {
    let (target, _) = parallel.target(lang)?;
    let pairs = parallel.mapped_pairs(lang)?;
    let next = offset + pairs.len();
    if offset + pairs.len() > lines.len() {
        return Err(IngestError::AlignmentLineCount {
            expected: next,
            found: lines.len(),
        });
    }
    let mut set = AlignmentSet::new();
    for (k, (s, t)) in pairs.into_iter().enumerate() {
        let line_no = offset + k + 1;
        let links = parse_pharaoh_line(lines[offset + k], line_no)?;
        let source_len = parallel.source.utterances[s].tokens.len();
        let target_len = target.utterances[t].tokens.len();
        if let Some(&(si, ti)) = links.iter().find(|&&(si, ti)| si >= source_len || ti >= target_len) {
            return Err(IngestError::AlignmentOutOfRange {
                line: line_no,
                source_index: si,
                target_index: ti,
                source_len,
                target_len,
            });
        }
        set.insert(UtteranceAlignment {
            source_utt: s,
            target_utt: t,
            links,
        });
    }
    Ok((set, next))
}

fn split_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    // A terminating newline does not open another (empty) pair.
    if text.ends_with('\n') || text.is_empty() {
        lines.pop();
    }
    lines
}

/// Alignments for a sequence of scenes from one Pharaoh text, one line per
/// mapped utterance pair, scenes back to back.
pub fn parse_pharaoh_str(text: &str, parallels: &[ParallelDocument], lang: &str) -> Result<Vec<AlignmentSet>, IngestError> {
    let lines = split_lines(text);
    let mut offset = 0;
    let mut out = Vec::with_capacity(parallels.len());
    for p in parallels {
        let (set, next) = take_document(&lines, offset, p, lang)?;
        out.push(set);
        offset = next;
    }
    if offset != lines.len() {
        return Err(IngestError::AlignmentLineCount {
            expected: offset,
            found: lines.len(),
        });
    }
    Ok(out)
}

/// Alignments for a single scene.
pub fn read_pharaoh_alignments(
    path: impl AsRef<Path>,
    parallel: &ParallelDocument,
    lang: &str,
) -> Result<AlignmentSet, IngestError> {
    let mut sets = read_pharaoh_corpus(path, std::slice::from_ref(parallel), lang)?;
    Ok(sets.pop().expect("one set per scene"))
}

pub fn read_pharaoh_corpus(
    path: impl AsRef<Path>,
    parallels: &[ParallelDocument],
    lang: &str,
) -> Result<Vec<AlignmentSet>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    parse_pharaoh_str(&text, parallels, lang)
}

/// Writes alignment sets in the order `read_pharaoh_corpus` consumes them.
pub fn write_pharaoh_corpus(
    sets: &[AlignmentSet],
    parallels: &[ParallelDocument],
    lang: &str,
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let mut buf = String::new();
    for (set, p) in sets.iter().zip(parallels) {
        for (s, _) in p.mapped_pairs(lang)? {
            if let Some(a) = set.get(s) {
                buf.push_str(&format_pharaoh_line(&a.links));
            }
            buf.push('\n');
        }
    }
    let path = path.as_ref();
    fs::write(path, buf).map_err(|e| IngestError::io(path, e))
}
