use mmc_core::merge::Answer;
use mmc_core::model::{Anchor, Document, MentionId};
use serde::{Deserialize, Serialize};

use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskKind {
    ProjectionReview,
    Adjudication,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::ProjectionReview => "PROJECTION_REVIEW",
            TaskKind::Adjudication => "ADJUDICATION",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PROJECTION_REVIEW" => Some(TaskKind::ProjectionReview),
            "ADJUDICATION" => Some(TaskKind::Adjudication),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskStatus {
    Open,
    Done,
}

impl TaskStatus {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "OPEN" => Some(TaskStatus::Open),
            "DONE" => Some(TaskStatus::Done),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextUtterance {
    pub index: usize,
    pub speaker: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskPayload {
    Projection {
        source_utterance: usize,
        source_tokens: Vec<String>,
        target_utterance: Option<usize>,
        target_tokens: Vec<String>,
        source_span: Anchor,
        predicted_span: Option<Anchor>,
    },
    Adjudication {
        query_span: Anchor,
        answer1: Answer,
        answer2: Answer,
        /// Utterances around the query, when the document is loaded.
        context: Vec<ContextUtterance>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub task_id: String,
    pub kind: TaskKind,
    pub doc_id: String,
    /// Order within the document.
    pub position: usize,
    /// Source mention or adjudicated query.
    pub mention: Option<MentionId>,
    pub status: TaskStatus,
    pub payload: TaskPayload,
}

const CONTEXT_RADIUS: usize = 2;

fn context(doc: Option<&Document>, utt: usize) -> Vec<ContextUtterance> {
    let Some(doc) = doc else { return Vec::new() };
    let lo = utt.saturating_sub(CONTEXT_RADIUS);
    let hi = (utt + CONTEXT_RADIUS + 1).min(doc.utterances.len());
    (lo..hi)
        .map(|i| ContextUtterance {
            index: i,
            speaker: doc.utterances[i].speaker.clone(),
            tokens: doc.utterances[i].tokens.clone(),
        })
        .collect()
}

/// One review task per source mention of every projection, and one
/// adjudication task per queued disagreement; all start OPEN.
pub(crate) fn build_tasks(store: &Store) -> Vec<ReviewTask> {
    let mut tasks = Vec::new();
    for (doc_id, r) in &store.projections {
        let mut mentions: Vec<_> = r.source.mentions.iter().collect();
        mentions.sort_by(|a, b| (a.anchor, &a.id).cmp(&(b.anchor, &b.id)));
        for (position, m) in mentions.into_iter().enumerate() {
            let su = m.anchor.utt();
            let tu = r.utterance_map.get(su).copied().flatten();
            let target_tokens = tu
                .and_then(|t| r.target_doc.utterances.get(t))
                .map(|u| u.tokens.clone())
                .unwrap_or_default();
            tasks.push(ReviewTask {
                task_id: format!("proj:{doc_id}:{}", m.id),
                kind: TaskKind::ProjectionReview,
                doc_id: doc_id.clone(),
                position,
                mention: Some(m.id.clone()),
                status: TaskStatus::Open,
                payload: TaskPayload::Projection {
                    source_utterance: su,
                    source_tokens: r.source.utterances.get(su).map(|u| u.tokens.clone()).unwrap_or_default(),
                    target_utterance: tu,
                    target_tokens,
                    source_span: m.anchor,
                    predicted_span: r.target_doc.mention(m.id.as_str()).map(|t| t.anchor),
                },
            });
        }
    }
    for (doc_id, state) in &store.merges {
        let doc = store.documents.get(doc_id);
        for (position, t) in state.disagreements.iter().enumerate() {
            tasks.push(ReviewTask {
                task_id: format!("adj:{doc_id}:{}", t.query),
                kind: TaskKind::Adjudication,
                doc_id: doc_id.clone(),
                position,
                mention: Some(t.query.clone()),
                status: TaskStatus::Open,
                payload: TaskPayload::Adjudication {
                    query_span: t.anchor,
                    answer1: t.answer1.clone(),
                    answer2: t.answer2.clone(),
                    context: context(doc, t.anchor.utt()),
                },
            });
        }
    }
    tasks.sort_by(|a, b| (&a.doc_id, a.kind, a.position).cmp(&(&b.doc_id, b.kind, b.position)));
    tasks
}
