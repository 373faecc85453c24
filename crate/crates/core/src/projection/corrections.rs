use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{relink, ProjectionResult, ProjectionStatus};
use crate::model::{validate_document, Anchor, ClusterError, Document, MentionId, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CorrectionAction {
    Addition,
    Deletion,
    Modification,
}

impl CorrectionAction {
    pub fn as_str(&self) -> &'static str {
        match self {
            CorrectionAction::Addition => "ADDITION",
            CorrectionAction::Deletion => "DELETION",
            CorrectionAction::Modification => "MODIFICATION",
        }
    }
}

/// One human edit to a projected document.
///
/// `mention` is the source mention id; projected mentions keep it on the
/// target side. `span: None` is the empty-span marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub action: CorrectionAction,
    pub mention: MentionId,
    #[serde(default)]
    pub span: Option<Anchor>,
    pub annotator: String,
    /// Milliseconds.
    pub timestamp: i64,
}

impl Correction {
    /// MODIFICATION to an empty span becomes DELETION.
    pub fn normalized(&self) -> Self {
        let mut c = self.clone();
        if c.action == CorrectionAction::Modification && c.span.is_none() {
            c.action = CorrectionAction::Deletion;
        }
        if c.action == CorrectionAction::Deletion {
            c.span = None;
        }
        c
    }
}

/// A correction as stored in a log file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    /// Set when this record overrides an earlier decision on a closed task.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub supersedes: bool,
    #[serde(flatten)]
    pub correction: Correction,
}

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("correction #{index} ({action} {mention}): unknown mention id")]
    UnknownMention {
        index: usize,
        action: &'static str,
        mention: MentionId,
    },
    #[error("correction #{index} ({action} {mention}): span required")]
    MissingSpan {
        index: usize,
        action: &'static str,
        mention: MentionId,
    },
    #[error("correction #{index} ({mention}): {span} is not the kind of the source mention")]
    KindMismatch { index: usize, mention: MentionId, span: Anchor },
    #[error("correction #{index} ({mention}): {span} lies outside the target document")]
    SpanOutOfRange { index: usize, mention: MentionId, span: Anchor },
    #[error("correction #{index} (MODIFICATION {mention}): mention is not present on the target side")]
    ModifiesAbsent { index: usize, mention: MentionId },
    #[error("corrected document violates {} invariant(s): {}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corrected {
    pub document: Document,
    pub warnings: Vec<String>,
}

/// Replays `log` against the current target document of `result`.
///
/// Corrections apply in `(timestamp, log position)` order and each sets the
/// state of one mention, so the last one per mention wins. Links are then
/// rebuilt from the source structure over the mentions present.
pub fn apply_corrections(result: &ProjectionResult, log: &[Correction]) -> Result<Corrected, CorrectionError> {
    let source: BTreeMap<&MentionId, Anchor> = result.source.mentions.iter().map(|m| (&m.id, m.anchor)).collect();
    let mut present: BTreeMap<MentionId, Anchor> =
        result.target_doc.mentions.iter().map(|m| (m.id.clone(), m.anchor)).collect();
    let mut added: BTreeSet<MentionId> = BTreeSet::new();
    let mut warnings = Vec::new();

    let mut order: Vec<usize> = (0..log.len()).collect();
    order.sort_by_key(|&i| (log[i].timestamp, i));
    for index in order {
        let c = log[index].normalized();
        let action = c.action.as_str();
        let Some(src_anchor) = source.get(&c.mention) else {
            return Err(CorrectionError::UnknownMention { index, action, mention: c.mention });
        };
        let span = match (c.action, c.span) {
            (CorrectionAction::Deletion, _) => None,
            (_, None) => return Err(CorrectionError::MissingSpan { index, action, mention: c.mention }),
            (_, Some(s)) => {
                if s.kind() != src_anchor.kind() {
                    return Err(CorrectionError::KindMismatch { index, mention: c.mention, span: s });
                }
                if !result.target_doc.contains_anchor(&s) {
                    return Err(CorrectionError::SpanOutOfRange { index, mention: c.mention, span: s });
                }
                Some(s)
            }
        };
        match c.action {
            CorrectionAction::Deletion => {
                present.remove(&c.mention);
            }
            CorrectionAction::Addition => {
                if !added.insert(c.mention.clone()) {
                    warnings.push(format!("correction #{index}: duplicate ADDITION for {}, latest wins", c.mention));
                }
                present.insert(c.mention, span.expect("checked above"));
            }
            CorrectionAction::Modification => {
                let projected = result.status(&c.mention) == Some(ProjectionStatus::Projected);
                if !projected && !added.contains(&c.mention) {
                    return Err(CorrectionError::ModifiesAbsent { index, mention: c.mention });
                }
                present.insert(c.mention, span.expect("checked above"));
            }
        }
    }

    let mut document = result.target_doc.clone();
    document.mentions = relink(&result.source.mentions, &present)?;
    let violations = validate_document(&document);
    if !violations.is_empty() {
        return Err(CorrectionError::Invalid(violations));
    }
    Ok(Corrected { document, warnings })
}
