use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Anchor, Document, MentionFlag, MentionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    UtteranceOutOfRange,
    SpanOutOfRange,
    DuplicateId,
    DuplicateSpan,
    DanglingAntecedent,
    SelfAntecedent,
    UnflaggedEmptyUtterance,
    FlaggedUtteranceHasTokens,
    ConflictingFlags,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::UtteranceOutOfRange => "UTTERANCE_OUT_OF_RANGE",
            Self::SpanOutOfRange => "SPAN_OUT_OF_RANGE",
            Self::DuplicateId => "DUPLICATE_ID",
            Self::DuplicateSpan => "DUPLICATE_SPAN",
            Self::DanglingAntecedent => "DANGLING_ANTECEDENT",
            Self::SelfAntecedent => "SELF_ANTECEDENT",
            Self::UnflaggedEmptyUtterance => "UNFLAGGED_EMPTY_UTTERANCE",
            Self::FlaggedUtteranceHasTokens => "FLAGGED_UTTERANCE_HAS_TOKENS",
            Self::ConflictingFlags => "CONFLICTING_FLAGS",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mention: Option<MentionId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)?;
        if let Some(m) = &self.mention {
            write!(f, " mention={m}")?;
        }
        if let Some(u) = self.utterance {
            write!(f, " utt={u}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Every invariant violation in `doc`; empty iff the document is valid.
pub fn validate_document(doc: &Document) -> Vec<Violation> {
    let mut out = Vec::new();

    for (i, u) in doc.utterances.iter().enumerate() {
        if u.tokens.is_empty() && !u.empty {
            out.push(Violation {
                code: ViolationCode::UnflaggedEmptyUtterance,
                utterance: Some(i),
                mention: None,
                detail: "utterance has no tokens but is not flagged empty".into(),
            });
        }
        if u.empty && !u.tokens.is_empty() {
            out.push(Violation {
                code: ViolationCode::FlaggedUtteranceHasTokens,
                utterance: Some(i),
                mention: None,
                detail: format!("placeholder utterance carries {} tokens", u.tokens.len()),
            });
        }
    }

    let mut ids: BTreeSet<&MentionId> = BTreeSet::new();
    let mut anchors: BTreeMap<Anchor, &MentionId> = BTreeMap::new();
    for m in &doc.mentions {
        let here = |code, detail: String| Violation {
            code,
            utterance: Some(m.anchor.utt()),
            mention: Some(m.id.clone()),
            detail,
        };
        if !ids.insert(&m.id) {
            out.push(here(ViolationCode::DuplicateId, format!("id {} used twice", m.id)));
        }
        match doc.utterances.get(m.anchor.utt()) {
            None => out.push(here(
                ViolationCode::UtteranceOutOfRange,
                format!(
                    "utterance {} does not exist ({} utterances)",
                    m.anchor.utt(),
                    doc.utterances.len()
                ),
            )),
            Some(u) => {
                if let Some((s, e)) = m.anchor.range() {
                    if s >= e || e > u.tokens.len() {
                        out.push(here(
                            ViolationCode::SpanOutOfRange,
                            format!("span [{s},{e}) outside utterance of {} tokens", u.tokens.len()),
                        ));
                    }
                }
            }
        }
        if m.anchor.range().is_some() {
            if let Some(prev) = anchors.insert(m.anchor, &m.id) {
                out.push(here(
                    ViolationCode::DuplicateSpan,
                    format!("span {} already annotated by {prev}", m.anchor),
                ));
            }
        }
        if m.has(MentionFlag::NoAntecedent) && !m.antecedents.is_empty() {
            out.push(here(
                ViolationCode::ConflictingFlags,
                "NO_ANTECEDENT mention lists antecedents".into(),
            ));
        }
        if m.has(MentionFlag::NotMention) && !m.antecedents.is_empty() {
            out.push(here(
                ViolationCode::ConflictingFlags,
                "NOT_MENTION mention lists antecedents".into(),
            ));
        }
    }

    for m in &doc.mentions {
        for a in &m.antecedents {
            if *a == m.id {
                out.push(Violation {
                    code: ViolationCode::SelfAntecedent,
                    utterance: Some(m.anchor.utt()),
                    mention: Some(m.id.clone()),
                    detail: "mention lists itself as antecedent".into(),
                });
            } else if !ids.contains(a) {
                out.push(Violation {
                    code: ViolationCode::DanglingAntecedent,
                    utterance: Some(m.anchor.utt()),
                    mention: Some(m.id.clone()),
                    detail: format!("antecedent {a} not found"),
                });
            }
        }
    }
    out
}
