use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{validate_document, Document};

/// Version written into every document record.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Reject any document that violates a model invariant.
    #[default]
    Strict,
    /// Accept structurally well-formed records as-is.
    Lenient,
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    schema_version: u32,
    #[serde(flatten)]
    doc: Document,
}

#[derive(Serialize)]
struct DocumentRecordRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    doc: &'a Document,
}

/// Compact JSON with object keys sorted.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // serde_json::Value maps are ordered by key.
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("value serializes")
}

pub fn document_to_line(doc: &Document) -> String {
    canonical_json(&DocumentRecordRef {
        schema_version: SCHEMA_VERSION,
        doc,
    })
}

pub fn document_from_line(line: &str, line_no: usize) -> Result<Document, IngestError> {
    let rec: DocumentRecord = serde_json::from_str(line).map_err(|e| IngestError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    if rec.schema_version != SCHEMA_VERSION {
        return Err(IngestError::Parse {
            line: line_no,
            message: format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                rec.schema_version
            ),
        });
    }
    Ok(rec.doc)
}

pub fn parse_document_jsonl(text: &str, mode: Strictness) -> Result<Vec<Document>, IngestError> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = document_from_line(line, i + 1)?;
        if mode == Strictness::Strict {
            let violations = validate_document(&doc);
            if !violations.is_empty() {
                return Err(IngestError::Invalid {
                    line: i + 1,
                    doc_id: doc.doc_id,
                    violations,
                });
            }
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_document_jsonl(path: impl AsRef<Path>, mode: Strictness) -> Result<Vec<Document>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    parse_document_jsonl(&text, mode)
}

pub fn write_document_jsonl<'a, I>(docs: I, path: impl AsRef<Path>) -> Result<(), IngestError>
where
    I: IntoIterator<Item = &'a Document>,
{
    let lines = docs.into_iter().map(document_to_line);
    write_lines(lines, path.as_ref())
}

/// Generic line-delimited records; blank lines are skipped.
pub fn read_jsonl_str<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, IngestError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| IngestError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    read_jsonl_str(&text)
}

pub fn write_jsonl<'a, T, I>(records: I, path: impl AsRef<Path>) -> Result<(), IngestError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    write_lines(records.into_iter().map(|r| canonical_json(r)), path.as_ref())
}

fn write_lines<I: Iterator<Item = String>>(lines: I, path: &Path) -> Result<(), IngestError> {
    let mut buf = String::new();
    for l in lines {
        buf.push_str(&l);
        buf.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| IngestError::io(path, e))?;
    f.write_all(buf.as_bytes()).map_err(|e| IngestError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mention, MentionFlag, Utterance};

    fn doc() -> Document {
        let mut d = Document::new("friends_s01e01_c00", "en");
        d.utterances = vec![
            Utterance::new("Monica", ["He", "'s", "just", "some", "guy", "I", "work", "with", "!"]),
            Utterance::placeholder("Joey"),
        ];
        d.mentions = vec![
            Mention::span("m0", 0, 0, 1),
            Mention::span("m1", 0, 3, 5).with_antecedents(["m0"]),
            Mention::span("m2", 0, 5, 6).with_flag(MentionFlag::NoAntecedent),
            Mention::speaker("s0", 0).with_antecedents(["m2"]),
        ];
        d.metadata.insert("episode".into(), "s01e01".into());
        d.metadata.insert("scene".into(), "0".into());
        d
    }

    #[test]
    fn canonical_line_has_sorted_keys_and_version() {
        let line = document_to_line(&doc());
        assert!(line.starts_with(r#"{"doc_id":"friends_s01e01_c00","language":"en","mentions":["#));
        assert!(line.ends_with(r#""schema_version":1,"utterances":[{"speaker":"Monica","tokens":["He","'s","just","some","guy","I","work","with","!"]},{"empty":true,"speaker":"Joey","tokens":[]}]}"#));
        let back = document_from_line(&line, 1).unwrap();
        assert_eq!(back, doc());
        assert_eq!(document_to_line(&back), line);
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(parse_document_jsonl("", Strictness::Strict).unwrap().is_empty());
        assert!(parse_document_jsonl("\n\n", Strictness::Strict).unwrap().is_empty());
    }

    #[test]
    fn inverted_span_names_line() {
        let good = document_to_line(&doc());
        let bad = good.replace(r#""end":5"#, r#""end":2"#);
        let text = format!("{good}\n{bad}\n");
        match parse_document_jsonl(&text, Strictness::Lenient) {
            Err(IngestError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("must exceed start"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strict_mode_rejects_invariant_violations() {
        let mut d = doc();
        d.mentions.push(Mention::span("m0", 0, 7, 8));
        let text = document_to_line(&d);
        match parse_document_jsonl(&text, Strictness::Strict) {
            Err(IngestError::Invalid { line, violations, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(violations[0].code.as_str(), "DUPLICATE_ID");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse_document_jsonl(&text, Strictness::Lenient).unwrap().len(), 1);
    }

    #[test]
    fn wrong_schema_version() {
        let line = document_to_line(&doc()).replace(r#""schema_version":1"#, r#""schema_version":9"#);
        assert!(matches!(document_from_line(&line, 3), Err(IngestError::Parse { line: 3, .. })));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("docs.jsonl");
        let docs = vec![doc(), Document::new("empty", "zh")];
        write_document_jsonl(&docs, &p).unwrap();
        assert_eq!(read_document_jsonl(&p, Strictness::Strict).unwrap(), docs);
        let missing = dir.path().join("nope.jsonl");
        assert!(matches!(read_document_jsonl(&missing, Strictness::Strict), Err(IngestError::Io { .. })));
    }
}
