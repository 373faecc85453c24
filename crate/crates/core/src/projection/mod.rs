//! Span projection through word alignments, human corrections and
//! projection statistics.
//!
//! A source mention projects to the contiguous hull of the target tokens
//! aligned to it. Mentions without aligned tokens, or whose utterance has
//! no usable counterpart, are null projections. Clusters are carried over
//! implicitly: antecedent links are rewritten over the surviving mentions so
//! that each target cluster is the source cluster minus its dropped members.

mod corrections;
mod links;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{AlignmentSet, IngestError, ParallelDocument};
use crate::model::{cluster_mentions, Anchor, ClusterError, Document, Mention, MentionId, SplitPolicy};

pub use corrections::{apply_corrections, Correction, CorrectionAction, CorrectionError, CorrectionRecord, Corrected};
pub use links::relink;
pub use report::{projection_stats_report, CorrectionCounts, StatsReport, StatsRow};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("alignment for source utterance {source_utt} names target {target_utt}, utterance map says {mapped:?}")]
    UnmappedPair {
        source_utt: usize,
        target_utt: usize,
        mapped: Option<usize>,
    },
    #[error("mention {mention} sits in utterance {utt}, source has {len}")]
    SourceOutOfRange { mention: MentionId, utt: usize, len: usize },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// Contiguous hull of the target tokens aligned to `[start, end)`.
pub fn project_span(span: (usize, usize), links: &BTreeSet<(usize, usize)>) -> Option<(usize, usize)> {
    let (start, end) = span;
    let mut hull: Option<(usize, usize)> = None;
    for &(_, t) in links.range((start, 0)..(end, 0)) {
        hull = Some(match hull {
            None => (t, t + 1),
            Some((lo, hi)) => (lo.min(t), hi.max(t + 1)),
        });
    }
    hull
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProjectionStatus {
    Projected,
    NullProjection,
}

/// Why a mention did not project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NullReason {
    /// Source utterance has no target counterpart.
    NoCounterpart,
    /// Counterpart is a placeholder or has no tokens.
    EmptyCounterpart,
    /// No source token of the span is aligned.
    NoAlignedTokens,
    /// An earlier mention already projected onto the same target span.
    Collision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: MentionId,
    pub status: ProjectionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<NullReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProjectionStats {
    pub source_mentions: usize,
    pub projected: usize,
    pub null_projections: usize,
    pub clusters_source: usize,
    pub clusters_surviving: usize,
}

impl ProjectionStats {
    pub fn add(&mut self, other: &Self) {
        self.source_mentions += other.source_mentions;
        self.projected += other.projected;
        self.null_projections += other.null_projections;
        self.clusters_source += other.clusters_source;
        self.clusters_surviving += other.clusters_surviving;
    }
}

/// Projected target document with per-mention provenance.
///
/// Target mentions keep their source ids, so provenance is keyed by the
/// source id for both projected and dropped mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// Source document; its mentions drive link re-derivation.
    pub source: Document,
    pub language: String,
    /// Target utterance per source utterance.
    pub utterance_map: Vec<Option<usize>>,
    pub target_doc: Document,
    pub provenance: BTreeMap<MentionId, Provenance>,
    pub stats: ProjectionStats,
}

impl ProjectionResult {
    pub fn status(&self, id: &MentionId) -> Option<ProjectionStatus> {
        self.provenance.get(id).map(|p| p.status)
    }

    /// Same projection with a different current target document.
    pub fn with_target(&self, doc: Document) -> Self {
        Self {
            target_doc: doc,
            ..self.clone()
        }
    }

    pub fn null_projected(&self) -> impl Iterator<Item = &MentionId> {
        self.provenance
            .iter()
            .filter(|(_, p)| p.status == ProjectionStatus::NullProjection)
            .map(|(id, _)| id)
    }
}

fn projected_anchor(
    m: &Mention,
    target: &Document,
    map: &[Option<usize>],
    alignments: &AlignmentSet,
) -> Result<Result<Anchor, NullReason>, ProjectionError> {
    let src_utt = m.anchor.utt();
    let mapped = *map.get(src_utt).ok_or_else(|| ProjectionError::SourceOutOfRange {
        mention: m.id.clone(),
        utt: src_utt,
        len: map.len(),
    })?;
    let Some(t) = mapped else { return Ok(Err(NullReason::NoCounterpart)) };
    if target.utterances.get(t).is_none_or(|u| u.is_blank()) {
        return Ok(Err(NullReason::EmptyCounterpart));
    }
    Ok(match m.anchor {
        Anchor::Speaker { .. } => Ok(Anchor::speaker(t)),
        Anchor::Span { start, end, .. } => {
            let empty = BTreeSet::new();
            let links = alignments.get(src_utt).map_or(&empty, |a| &a.links);
            project_span((start, end), links)
                .map(|(s, e)| Anchor::span(t, s, e))
                .ok_or(NullReason::NoAlignedTokens)
        }
    })
}

/// Projects every source mention of `parallel` into its `lang` counterpart.
pub fn project_document(
    parallel: &ParallelDocument,
    alignments: &AlignmentSet,
    lang: &str,
) -> Result<ProjectionResult, ProjectionError> {
    let (target, map) = parallel.target(lang)?;
    for a in alignments.iter() {
        let mapped = map.get(a.source_utt).copied().flatten();
        if mapped != Some(a.target_utt) {
            return Err(ProjectionError::UnmappedPair {
                source_utt: a.source_utt,
                target_utt: a.target_utt,
                mapped,
            });
        }
    }

    let source = &parallel.source;
    let mut present: BTreeMap<MentionId, Anchor> = BTreeMap::new();
    let mut taken: BTreeSet<Anchor> = BTreeSet::new();
    let mut provenance = BTreeMap::new();
    for m in &source.mentions {
        let outcome = projected_anchor(m, target, map, alignments)?
            .and_then(|a| if taken.insert(a) { Ok(a) } else { Err(NullReason::Collision) });
        let (status, reason) = match outcome {
            Ok(anchor) => {
                present.insert(m.id.clone(), anchor);
                (ProjectionStatus::Projected, None)
            }
            Err(r) => (ProjectionStatus::NullProjection, Some(r)),
        };
        provenance.insert(
            m.id.clone(),
            Provenance {
                source: m.id.clone(),
                status,
                reason,
            },
        );
    }

    let mut target_doc = target.clone();
    target_doc.mentions = relink(&source.mentions, &present)?;
    let stats = ProjectionStats {
        source_mentions: source.mentions.len(),
        projected: present.len(),
        null_projections: source.mentions.len() - present.len(),
        clusters_source: cluster_mentions(&source.mentions, SplitPolicy::DropSplit)?.len(),
        clusters_surviving: cluster_mentions(&target_doc.mentions, SplitPolicy::DropSplit)?.len(),
    };
    Ok(ProjectionResult {
        source: source.clone(),
        language: lang.to_owned(),
        utterance_map: map.to_vec(),
        target_doc,
        provenance,
        stats,
    })
}
