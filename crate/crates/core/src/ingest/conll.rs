//! CoNLL-2012 column format.
//!
//! Written rows carry twelve tab-separated columns:
//! `doc part index word pos parse lemma frameset sense speaker ne coref`.
//! The reader only needs the document id, the word, the speaker (column 10
//! when at least twelve columns are present) and the last column.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::IngestError;
use crate::model::{Anchor, Clustering, Document, Mention, MentionFlag, MentionId, Utterance};

const PLACEHOLDER_COLUMNS: &str = "-\t-\t-\t-\t-";

/// Parses every `#begin document` … `#end document` block.
///
/// Mentions get ids `m0, m1, …` in document order; within a cluster each
/// mention links to the previous one and the first is flagged
/// `NO_ANTECEDENT`.
pub fn parse_conll(text: &str) -> Result<Vec<Document>, IngestError> {
    let mut docs = Vec::new();
    let mut cur: Option<DocBuilder> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        if let Some(rest) = line.strip_prefix("#begin document") {
            if cur.is_some() {
                return Err(conll_err(line_no, "nested #begin document"));
            }
            let (name, part) = parse_header(rest).ok_or_else(|| conll_err(line_no, "malformed #begin document header"))?;
            cur = Some(DocBuilder::new(name, part));
            continue;
        }
        if line.starts_with("#end document") {
            let b = cur.take().ok_or_else(|| conll_err(line_no, "#end document without #begin"))?;
            docs.push(b.finish(line_no)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let Some(b) = cur.as_mut() else {
            if line.is_empty() {
                continue;
            }
            return Err(conll_err(line_no, "token row outside a document"));
        };
        if line.is_empty() {
            b.end_sentence(line_no)?;
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 4 {
            return Err(conll_err(line_no, &format!("expected at least 4 columns, found {}", cols.len())));
        }
        let speaker = if cols.len() >= 12 { cols[9] } else { "-" };
        b.token(line_no, cols[3], speaker, cols[cols.len() - 1])?;
    }
    if cur.is_some() {
        return Err(conll_err(text.lines().count(), "missing #end document"));
    }
    Ok(docs)
}

pub fn read_conll_skeleton(path: impl AsRef<Path>) -> Result<Vec<Document>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    parse_conll(&text)
}

fn conll_err(line: usize, message: &str) -> IngestError {
    IngestError::Conll {
        line,
        message: message.to_string(),
    }
}

/// `" (name); part 000"` → `("name", "000")`.
fn parse_header(rest: &str) -> Option<(String, String)> {
    let rest = rest.trim();
    let open = rest.find('(')?;
    let close = rest.rfind(')')?;
    let name = rest.get(open + 1..close)?.to_string();
    let part = rest[close + 1..]
        .trim_start_matches(';')
        .trim()
        .strip_prefix("part")
        .map(|p| p.trim().to_string())
        .unwrap_or_else(|| "000".to_string());
    Some((name, part))
}

struct DocBuilder {
    doc: Document,
    tokens: Vec<String>,
    speaker: Option<String>,
    open: HashMap<String, Vec<usize>>,
    spans: Vec<(Anchor, String, usize)>,
}

impl DocBuilder {
    fn new(name: String, part: String) -> Self {
        let doc_id = if part == "000" || part == "0" { name } else { format!("{name}/{part}") };
        let mut doc = Document::new(doc_id, "");
        doc.metadata.insert("part".into(), part);
        Self {
            doc,
            tokens: Vec::new(),
            speaker: None,
            open: HashMap::new(),
            spans: Vec::new(),
        }
    }

    fn token(&mut self, line: usize, word: &str, speaker: &str, coref: &str) -> Result<(), IngestError> {
        let utt = self.doc.utterances.len();
        let pos = self.tokens.len();
        self.tokens.push(word.to_string());
        if self.speaker.is_none() {
            self.speaker = Some(if speaker == "-" { String::new() } else { speaker.to_string() });
        }
        if coref == "-" {
            return Ok(());
        }
        for part in coref.split('|') {
            let bad = || conll_err(line, &format!("malformed coreference cell {coref:?}"));
            match (part.strip_prefix('('), part.strip_suffix(')')) {
                (Some(inner), Some(_)) => {
                    let id = inner.strip_suffix(')').filter(|s| !s.is_empty()).ok_or_else(bad)?;
                    self.spans.push((Anchor::span(utt, pos, pos + 1), id.to_string(), line));
                }
                (Some(id), None) if !id.is_empty() => self.open.entry(id.to_string()).or_default().push(pos),
                (None, Some(id)) if !id.is_empty() => {
                    let start = self
                        .open
                        .get_mut(id)
                        .and_then(Vec::pop)
                        .ok_or_else(|| conll_err(line, &format!("unbalanced parentheses: cluster {id} closed but never opened")))?;
                    self.spans.push((Anchor::span(utt, start, pos + 1), id.to_string(), line));
                }
                _ => return Err(bad()),
            }
        }
        Ok(())
    }

    fn end_sentence(&mut self, line: usize) -> Result<(), IngestError> {
        if self.tokens.is_empty() {
            return Ok(());
        }
        if let Some((id, _)) = self.open.iter().find(|(_, v)| !v.is_empty()) {
            return Err(conll_err(line, &format!("unbalanced parentheses: cluster {id} still open at sentence end")));
        }
        self.open.clear();
        self.doc.utterances.push(Utterance {
            speaker: self.speaker.take().unwrap_or_default(),
            tokens: std::mem::take(&mut self.tokens),
            empty: false,
        });
        Ok(())
    }

    fn finish(mut self, line: usize) -> Result<Document, IngestError> {
        self.end_sentence(line)?;
        let mut spans = std::mem::take(&mut self.spans);
        spans.sort();
        let mut seen: BTreeMap<Anchor, usize> = BTreeMap::new();
        for (anchor, _, row) in &spans {
            if seen.insert(*anchor, *row).is_some() {
                return Err(conll_err(*row, &format!("span {anchor} annotated twice")));
            }
        }
        let mut last_in_cluster: HashMap<String, MentionId> = HashMap::new();
        for (i, (anchor, cluster, _)) in spans.into_iter().enumerate() {
            let id = MentionId(format!("m{i}"));
            let mut m = Mention {
                id: id.clone(),
                anchor,
                antecedents: Vec::new(),
                flags: Default::default(),
            };
            match last_in_cluster.insert(cluster, id) {
                Some(prev) => m.antecedents.push(prev),
                None => {
                    m.flags.insert(MentionFlag::NoAntecedent);
                }
            }
            self.doc.mentions.push(m);
        }
        Ok(self.doc)
    }
}

/// Renders documents with their clusterings. Speaker mentions and
/// placeholder utterances have no CoNLL representation and are skipped.
pub fn format_conll(docs: &[Document], clusterings: &[Clustering<MentionId>]) -> String {
    let mut out = String::new();
    for (doc, clustering) in docs.iter().zip(clusterings) {
        let (name, part) = match doc.metadata.get("part") {
            Some(p) => (doc.doc_id.strip_suffix(&format!("/{p}")).unwrap_or(&doc.doc_id), p.as_str()),
            None => (doc.doc_id.as_str(), "000"),
        };
        let by_id = doc.mention_index();
        // (utt, token) → cell entries
        let mut opens: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        let mut singles: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let mut closes: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (cid, cluster) in clustering.clusters().iter().enumerate() {
            for id in cluster {
                let Some(&mi) = by_id.get(id) else { continue };
                let Anchor::Span { utt, start, end } = doc.mentions[mi].anchor else { continue };
                if end - start == 1 {
                    singles.entry((utt, start)).or_default().push(cid);
                } else {
                    opens.entry((utt, start)).or_default().push((end, cid));
                    closes.entry((utt, end - 1)).or_default().push((start, cid));
                }
            }
        }

        let _ = writeln!(out, "#begin document ({name}); part {part}");
        for (u, utt) in doc.utterances.iter().enumerate() {
            if utt.tokens.is_empty() {
                continue;
            }
            let speaker = if utt.speaker.is_empty() { "-".to_string() } else { utt.speaker.replace(char::is_whitespace, "_") };
            for (t, word) in utt.tokens.iter().enumerate() {
                let mut cell: Vec<String> = Vec::new();
                if let Some(v) = opens.get_mut(&(u, t)) {
                    // Outer spans open first.
                    v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                    cell.extend(v.iter().map(|(_, c)| format!("({c}")));
                }
                if let Some(v) = singles.get_mut(&(u, t)) {
                    v.sort_unstable();
                    cell.extend(v.iter().map(|c| format!("({c})")));
                }
                if let Some(v) = closes.get_mut(&(u, t)) {
                    // Inner spans close first.
                    v.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                    cell.extend(v.iter().map(|(_, c)| format!("{c})")));
                }
                let coref = if cell.is_empty() { "-".to_string() } else { cell.join("|") };
                let _ = writeln!(out, "{name}\t{part}\t{t}\t{word}\t{PLACEHOLDER_COLUMNS}\t{speaker}\t*\t{coref}");
            }
            out.push('\n');
        }
        out.push_str("#end document\n");
    }
    out
}

pub fn write_conll(docs: &[Document], clusterings: &[Clustering<MentionId>], path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    fs::write(path, format_conll(docs, clusterings)).map_err(|e| IngestError::io(path, e))
}
