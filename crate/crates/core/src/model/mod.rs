//! Dialogue documents, mentions and clusterings.
//!
//! A [`Document`] is one scene: ordered utterances with speakers and tokens,
//! plus mention annotations. Spans are token-indexed and end-exclusive.
//! Speaker references are a separate mention kind anchored to an utterance,
//! since transcripts carry no token offsets for speakers.

mod closure;
mod clustering;
mod validate;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use closure::{build_clusters, cluster_mentions, ClusterError, SplitPolicy};
pub use clustering::{Clustering, ClusteringError};
pub use validate::{validate_document, Violation, ViolationCode};

/// Opaque mention identifier, unique within a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MentionId(pub String);

impl MentionId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MentionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MentionId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for MentionId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl std::borrow::Borrow<str> for MentionId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionKind {
    Span,
    Speaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionFlag {
    Plural,
    Uncertain,
    NotMention,
    NoAntecedent,
}

/// Where a mention sits in its document.
///
/// Ordering follows document position: a speaker reference precedes the
/// tokens of its utterance, spans order by `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Anchor {
    Span { utt: usize, start: usize, end: usize },
    Speaker { utt: usize },
}

impl Anchor {
    pub fn span(utt: usize, start: usize, end: usize) -> Self {
        Anchor::Span { utt, start, end }
    }

    pub fn speaker(utt: usize) -> Self {
        Anchor::Speaker { utt }
    }

    pub fn utt(&self) -> usize {
        match *self {
            Anchor::Span { utt, .. } | Anchor::Speaker { utt } => utt,
        }
    }

    pub fn kind(&self) -> MentionKind {
        match self {
            Anchor::Span { .. } => MentionKind::Span,
            Anchor::Speaker { .. } => MentionKind::Speaker,
        }
    }

    /// `(start, end)` for spans.
    pub fn range(&self) -> Option<(usize, usize)> {
        match *self {
            Anchor::Span { start, end, .. } => Some((start, end)),
            Anchor::Speaker { .. } => None,
        }
    }

    fn position(&self) -> (usize, u8, usize, usize) {
        match *self {
            Anchor::Speaker { utt } => (utt, 0, 0, 0),
            Anchor::Span { utt, start, end } => (utt, 1, start, end),
        }
    }
}

impl Ord for Anchor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.position().cmp(&other.position())
    }
}

impl PartialOrd for Anchor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Anchor::Span { utt, start, end } => write!(f, "{utt}:[{start},{end})"),
            Anchor::Speaker { utt } => write!(f, "{utt}:speaker"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "RawMention", try_from = "RawMention")]
pub struct Mention {
    pub id: MentionId,
    pub anchor: Anchor,
    /// More than one entry encodes a split antecedent.
    pub antecedents: Vec<MentionId>,
    pub flags: BTreeSet<MentionFlag>,
}

impl Mention {
    pub fn span(id: impl Into<MentionId>, utt: usize, start: usize, end: usize) -> Self {
        Self {
            id: id.into(),
            anchor: Anchor::span(utt, start, end),
            antecedents: Vec::new(),
            flags: BTreeSet::new(),
        }
    }

    pub fn speaker(id: impl Into<MentionId>, utt: usize) -> Self {
        Self {
            id: id.into(),
            anchor: Anchor::speaker(utt),
            antecedents: Vec::new(),
            flags: BTreeSet::new(),
        }
    }

    pub fn with_antecedents<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<MentionId>,
    {
        self.antecedents = ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_flag(mut self, flag: MentionFlag) -> Self {
        self.flags.insert(flag);
        self
    }

    pub fn kind(&self) -> MentionKind {
        self.anchor.kind()
    }

    pub fn has(&self, flag: MentionFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_split(&self) -> bool {
        self.antecedents.len() > 1
    }
}

/// Flat wire form of a mention.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMention {
    id: MentionId,
    kind: MentionKind,
    utt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end: Option<usize>,
    #[serde(default)]
    antecedents: Vec<MentionId>,
    #[serde(default)]
    flags: BTreeSet<MentionFlag>,
}

impl From<Mention> for RawMention {
    fn from(m: Mention) -> Self {
        let (start, end) = match m.anchor.range() {
            Some((s, e)) => (Some(s), Some(e)),
            None => (None, None),
        };
        RawMention {
            id: m.id,
            kind: m.anchor.kind(),
            utt: m.anchor.utt(),
            start,
            end,
            antecedents: m.antecedents,
            flags: m.flags,
        }
    }
}

impl TryFrom<RawMention> for Mention {
    type Error = String;

    fn try_from(raw: RawMention) -> Result<Self, Self::Error> {
        let anchor = match (raw.kind, raw.start, raw.end) {
            (MentionKind::Span, Some(start), Some(end)) => {
                if end <= start {
                    return Err(format!(
                        "mention {}: span end {end} must exceed start {start}",
                        raw.id
                    ));
                }
                Anchor::span(raw.utt, start, end)
            }
            (MentionKind::Span, _, _) => {
                return Err(format!("mention {}: span requires start and end", raw.id))
            }
            (MentionKind::Speaker, None, None) => Anchor::speaker(raw.utt),
            (MentionKind::Speaker, _, _) => {
                return Err(format!(
                    "mention {}: speaker mention cannot carry token offsets",
                    raw.id
                ))
            }
        };
        Ok(Mention {
            id: raw.id,
            anchor,
            antecedents: raw.antecedents,
            flags: raw.flags,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Utterance {
    /// Empty for narration.
    #[serde(default)]
    pub speaker: String,
    pub tokens: Vec<String>,
    /// Placeholder for a missing subtitle line.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty: bool,
}

impl Utterance {
    pub fn new<S: Into<String>>(speaker: impl Into<String>, tokens: impl IntoIterator<Item = S>) -> Self {
        Self {
            speaker: speaker.into(),
            tokens: tokens.into_iter().map(Into::into).collect(),
            empty: false,
        }
    }

    pub fn placeholder(speaker: impl Into<String>) -> Self {
        Self {
            speaker: speaker.into(),
            tokens: Vec::new(),
            empty: true,
        }
    }

    /// True when the utterance carries no usable text.
    pub fn is_blank(&self) -> bool {
        self.empty || self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub language: String,
    pub utterances: Vec<Utterance>,
    #[serde(default)]
    pub mentions: Vec<Mention>,
    /// Show name, episode, scene index and similar.
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, language: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            language: language.into(),
            ..Default::default()
        }
    }

    pub fn mention(&self, id: &str) -> Option<&Mention> {
        self.mentions.iter().find(|m| m.id.as_str() == id)
    }

    pub fn mention_index(&self) -> BTreeMap<&MentionId, usize> {
        self.mentions.iter().enumerate().map(|(i, m)| (&m.id, i)).collect()
    }

    /// Tokens covered by a span anchor, or the speaker label for speaker anchors.
    pub fn surface(&self, anchor: &Anchor) -> Option<Vec<&str>> {
        let utt = self.utterances.get(anchor.utt())?;
        match anchor.range() {
            Some((s, e)) => utt
                .tokens
                .get(s..e)
                .map(|t| t.iter().map(String::as_str).collect()),
            None => Some(vec![utt.speaker.as_str()]),
        }
    }

    /// Whether `anchor` lies inside this document's utterances.
    pub fn contains_anchor(&self, anchor: &Anchor) -> bool {
        match self.utterances.get(anchor.utt()) {
            None => false,
            Some(u) => match anchor.range() {
                Some((s, e)) => s < e && e <= u.tokens.len(),
                None => true,
            },
        }
    }

    /// Distinct non-empty speaker labels.
    pub fn speakers(&self) -> BTreeSet<&str> {
        self.utterances
            .iter()
            .map(|u| u.speaker.as_str())
            .filter(|s| !s.is_empty())
            .collect()
    }

    /// Clustering keyed by mention anchors instead of ids.
    pub fn anchor_clustering(&self, policy: SplitPolicy) -> Result<Clustering<Anchor>, ClusterError> {
        let by_id: BTreeMap<&MentionId, Anchor> =
            self.mentions.iter().map(|m| (&m.id, m.anchor)).collect();
        let ids = build_clusters(self, policy)?;
        Ok(ids.map(|id| by_id[id]).expect("anchors unique in a valid document"))
    }
}
