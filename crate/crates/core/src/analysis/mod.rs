//! Baselines and corpus transforms: head-lemma linking, speaker-count
//! buckets and speaker-name randomization.

mod names;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Anchor, Clustering, Document, MentionId};

pub use names::{
    invert_names, mapping_from_tsv, mapping_to_tsv, parse_name_pool, plan_replacements, replace_names, NameError,
    NameMapping, NameReplacementPlan,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadedMention {
    pub id: MentionId,
    pub head_token: String,
    pub head_lemma: String,
}

impl HeadedMention {
    pub fn new(id: impl Into<MentionId>, head_token: impl Into<String>, head_lemma: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            head_token: head_token.into(),
            head_lemma: head_lemma.into(),
        }
    }

    /// Heuristic head: last token with an alphabetic character (else the
    /// last token), lemma lowercased. Speaker mentions use the speaker label.
    pub fn fallback(doc: &Document, id: &MentionId, anchor: &Anchor) -> Option<Self> {
        let tokens = doc.surface(anchor)?;
        let head = tokens
            .iter()
            .rev()
            .find(|t| t.chars().any(char::is_alphabetic))
            .or(tokens.last())?;
        Some(Self::new(id.clone(), *head, head.to_lowercase()))
    }
}

/// Fallback heads for every mention of `doc` that resolves to text.
pub fn fallback_heads(doc: &Document) -> Vec<HeadedMention> {
    doc.mentions
        .iter()
        .filter_map(|m| HeadedMention::fallback(doc, &m.id, &m.anchor))
        .collect()
}

/// Links every pair of mentions with the same head lemma.
pub fn head_lemma_baseline(mentions: &[HeadedMention]) -> Clustering<MentionId> {
    let mut groups: BTreeMap<&str, Vec<MentionId>> = BTreeMap::new();
    for m in mentions {
        groups.entry(&m.head_lemma).or_default().push(m.id.clone());
    }
    Clustering::new(groups.into_values()).expect("mention ids are unique")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpeakerBucket {
    #[serde(rename = "<=1")]
    AtMostOne,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = ">2")]
    MoreThanTwo,
}

impl SpeakerBucket {
    pub const ALL: [SpeakerBucket; 3] = [SpeakerBucket::AtMostOne, SpeakerBucket::Two, SpeakerBucket::MoreThanTwo];

    pub fn of(doc: &Document) -> Self {
        match doc.speakers().len() {
            0 | 1 => SpeakerBucket::AtMostOne,
            2 => SpeakerBucket::Two,
            _ => SpeakerBucket::MoreThanTwo,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SpeakerBucket::AtMostOne => "<=1",
            SpeakerBucket::Two => "2",
            SpeakerBucket::MoreThanTwo => ">2",
        }
    }
}

/// Buckets documents by distinct non-empty speaker count. All three buckets are present.
pub fn partition_by_speakers(docs: &[Document]) -> BTreeMap<SpeakerBucket, Vec<Document>> {
    let mut out: BTreeMap<SpeakerBucket, Vec<Document>> = SpeakerBucket::ALL.iter().map(|b| (*b, Vec::new())).collect();
    for d in docs {
        out.get_mut(&SpeakerBucket::of(d)).expect("all buckets present").push(d.clone());
    }
    out
}
