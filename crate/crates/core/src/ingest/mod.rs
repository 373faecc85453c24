//! On-disk formats and parallel-corpus assembly.
//!
//! The native interchange format is line-delimited JSON, one [`Document`]
//! per line with a `schema_version` field. Lines are written in canonical
//! form: compact, keys sorted. CoNLL-2012 is supported for import/export
//! only, since it cannot carry mention flags or speaker references.
//! Word alignments use the Pharaoh `i-j` convention.

mod assemble;
mod conll;
mod jsonl;
mod parallel;
mod pharaoh;

use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub use assemble::{assemble_three_way, AssembleConfig, FilterReport, LanguageCounts, SceneKey, SceneOutcome, SceneRecord, UtteranceMapRecord};
pub use conll::{format_conll, parse_conll, read_conll_skeleton, write_conll};
pub use jsonl::{
    canonical_json, document_from_line, document_to_line, parse_document_jsonl, read_document_jsonl, read_jsonl,
    read_jsonl_str, write_document_jsonl, write_jsonl, Strictness, SCHEMA_VERSION,
};
pub use parallel::{AlignmentSet, ParallelDocument, UtteranceAlignment};
pub use pharaoh::{
    format_pharaoh_line, parse_pharaoh_line, parse_pharaoh_str, read_pharaoh_alignments, read_pharaoh_corpus,
    write_pharaoh_corpus,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: document {doc_id} violates {} invariant(s): {}", violations.len(), summarize(violations))]
    Invalid {
        line: usize,
        doc_id: String,
        violations: Vec<Violation>,
    },
    #[error("line {line}: alignment pair {source_index}-{target_index} out of range (source has {source_len} tokens, target has {target_len})")]
    AlignmentOutOfRange {
        line: usize,
        source_index: usize,
        target_index: usize,
        source_len: usize,
        target_len: usize,
    },
    #[error("alignment file has {found} lines, expected {expected} aligned utterance pairs")]
    AlignmentLineCount { expected: usize, found: usize },
    #[error("row {line}: {message}")]
    Conll { line: usize, message: String },
    #[error("parallel document {doc_id}: {message}")]
    Parallel { doc_id: String, message: String },
    #[error("scene keys: {0}")]
    SceneKeys(String),
}

fn summarize(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl IngestError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.into(),
            source,
        }
    }
}
