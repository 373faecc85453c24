//! Data directory contents, append-only logs and the views derived from them.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mmc_core::ingest::{canonical_json, read_document_jsonl, read_jsonl, read_jsonl_str, Strictness};
use mmc_core::merge::{apply_decisions, merge_two_way, validate_triplets, AdjudicationDecision, AnnotationTriplet, Choice, MergeState};
use mmc_core::model::{Anchor, Document, MentionId};
use mmc_core::projection::{apply_corrections, Correction, CorrectionAction, CorrectionRecord, ProjectionResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::tasks::{build_tasks, ReviewTask, TaskKind, TaskStatus};

pub const PROJECTIONS: &str = "projections.jsonl";
pub const DOCUMENTS: &str = "documents.jsonl";
pub const ADJUDICATION: &str = "adjudication.jsonl";
pub const CORRECTION_LOG: &str = "corrections.log.jsonl";
pub const DECISION_LOG: &str = "adjudications.log.jsonl";

/// Double-annotated queries of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationSet {
    pub doc_id: String,
    pub triplets: Vec<AnnotationTriplet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub doc_id: String,
    pub task_id: String,
    pub annotator: String,
    pub timestamp: i64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub supersedes: bool,
    #[serde(flatten)]
    pub decision: AdjudicationDecision,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRequest {
    pub task_id: String,
    pub action: CorrectionAction,
    #[serde(default)]
    pub span: Option<Anchor>,
    pub annotator: String,
    #[serde(default, rename = "override")]
    pub override_done: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub task_id: String,
    #[serde(flatten)]
    pub choice: Choice,
    pub annotator: String,
    #[serde(default, rename = "override")]
    pub override_done: bool,
}

pub struct Store {
    dir: PathBuf,
    pub(crate) projections: BTreeMap<String, ProjectionResult>,
    pub(crate) documents: BTreeMap<String, Document>,
    pub(crate) merges: BTreeMap<String, MergeState>,
    corrections: Vec<CorrectionRecord>,
    decisions: Vec<DecisionRecord>,
    views: BTreeMap<String, Document>,
    merge_views: BTreeMap<String, MergeState>,
    tasks: Vec<ReviewTask>,
    task_index: BTreeMap<String, usize>,
    last_timestamp: i64,
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::Internal(e.to_string())
}

/// Reads a log, dropping a torn final line left by an interrupted append.
fn read_log<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() != text.len() && read_jsonl_str::<T>(&text).is_err() {
        fs::write(path, complete).map_err(|e| format!("{}: {e}", path.display()))?;
        return read_jsonl_str(complete).map_err(|e| format!("{}: {e}", path.display()));
    }
    read_jsonl_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn append_line(path: &Path, line: &str) -> Result<(), ApiError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(internal)?;
    f.write_all(format!("{line}\n").as_bytes()).map_err(internal)?;
    f.sync_data().map_err(internal)
}

fn now_ms() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
}

impl Store {
    /// Loads inputs from `dir` and replays both logs.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, String> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(format!("{} is not a directory", dir.display()));
        }
        let optional = |name: &str| -> Option<PathBuf> { Some(dir.join(name)).filter(|p| p.exists()) };
        let projections: Vec<ProjectionResult> = match optional(PROJECTIONS) {
            Some(p) => read_jsonl(p).map_err(|e| e.to_string())?,
            None => Vec::new(),
        };
        let documents = match optional(DOCUMENTS) {
            Some(p) => read_document_jsonl(p, Strictness::Strict).map_err(|e| e.to_string())?,
            None => Vec::new(),
        };
        let sets: Vec<AdjudicationSet> = match optional(ADJUDICATION) {
            Some(p) => read_jsonl(p).map_err(|e| e.to_string())?,
            None => Vec::new(),
        };
        let mut merges = BTreeMap::new();
        for s in sets {
            let state = merge_two_way(&s.triplets).map_err(|e| format!("adjudication set {}: {e}", s.doc_id))?;
            merges.insert(s.doc_id, state);
        }

        let mut store = Store {
            projections: projections.into_iter().map(|r| (r.target_doc.doc_id.clone(), r)).collect(),
            documents: documents.into_iter().map(|d| (d.doc_id.clone(), d)).collect(),
            merges,
            corrections: read_log(&dir.join(CORRECTION_LOG))?,
            decisions: read_log(&dir.join(DECISION_LOG))?,
            dir,
            views: BTreeMap::new(),
            merge_views: BTreeMap::new(),
            tasks: Vec::new(),
            task_index: BTreeMap::new(),
            last_timestamp: 0,
        };
        store.tasks = build_tasks(&store);
        store.task_index = store.tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();
        for id in store.projections.keys().cloned().collect::<Vec<_>>() {
            let view = store.corrected(&id, None).map_err(|e| format!("replaying corrections for {id}: {e}"))?;
            store.views.insert(id, view);
        }
        for id in store.merges.keys().cloned().collect::<Vec<_>>() {
            let view = store.decided(&id, None).map_err(|e| format!("replaying decisions for {id}: {e}"))?;
            store.merge_views.insert(id, view);
        }
        let done: Vec<String> = store
            .corrections
            .iter()
            .filter_map(|r| r.task_id.clone())
            .chain(store.decisions.iter().map(|r| r.task_id.clone()))
            .collect();
        for id in done {
            if let Some(&i) = store.task_index.get(&id) {
                store.tasks[i].status = TaskStatus::Done;
            }
        }
        store.last_timestamp = store
            .corrections
            .iter()
            .map(|r| r.correction.timestamp)
            .chain(store.decisions.iter().map(|r| r.timestamp))
            .max()
            .unwrap_or(0);
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn tasks(&self) -> &[ReviewTask] {
        &self.tasks
    }

    pub fn task(&self, id: &str) -> Option<&ReviewTask> {
        self.task_index.get(id).map(|&i| &self.tasks[i])
    }

    /// Corrected projection if `id` names one, else a loaded document.
    pub fn document(&self, id: &str) -> Option<&Document> {
        self.views.get(id).or_else(|| self.documents.get(id))
    }

    pub fn merge_view(&self, id: &str) -> Option<&MergeState> {
        self.merge_views.get(id)
    }

    pub fn correction_log(&self) -> &[CorrectionRecord] {
        &self.corrections
    }

    pub fn decision_log(&self) -> &[DecisionRecord] {
        &self.decisions
    }

    fn next_timestamp(&mut self) -> i64 {
        self.last_timestamp = now_ms().max(self.last_timestamp + 1);
        self.last_timestamp
    }

    fn corrected(&self, doc_id: &str, extra: Option<&Correction>) -> Result<Document, String> {
        let result = &self.projections[doc_id];
        let log: Vec<Correction> = self
            .corrections
            .iter()
            .filter(|r| r.doc_id == doc_id)
            .map(|r| r.correction.clone())
            .chain(extra.cloned())
            .collect();
        apply_corrections(result, &log).map(|c| c.document).map_err(|e| e.to_string())
    }

    fn decided(&self, doc_id: &str, extra: Option<&AdjudicationDecision>) -> Result<MergeState, String> {
        let mut latest: BTreeMap<&MentionId, &AdjudicationDecision> = BTreeMap::new();
        for r in self.decisions.iter().filter(|r| r.doc_id == doc_id) {
            latest.insert(&r.decision.query, &r.decision);
        }
        if let Some(d) = extra {
            latest.insert(&d.query, d);
        }
        let decisions: Vec<AdjudicationDecision> = latest.into_values().cloned().collect();
        apply_decisions(&self.merges[doc_id], &decisions).map_err(|e| e.to_string())
    }

    fn open_task(&self, id: &str, kind: TaskKind) -> Result<&ReviewTask, ApiError> {
        let task = self.task(id).ok_or_else(|| ApiError::NotFound(format!("unknown task {id}")))?;
        if task.kind != kind {
            return Err(ApiError::Unprocessable(format!("task {id} is not a {} task", kind.as_str())));
        }
        Ok(task)
    }

    fn mark_done(&mut self, task_id: &str) {
        if let Some(&i) = self.task_index.get(task_id) {
            self.tasks[i].status = TaskStatus::Done;
        }
    }

    /// Records a projection correction. Returns the stored record.
    pub fn submit_correction(&mut self, req: CorrectionRequest) -> Result<CorrectionRecord, ApiError> {
        let task = self.open_task(&req.task_id, TaskKind::ProjectionReview)?.clone();
        if req.annotator.trim().is_empty() {
            return Err(ApiError::Unprocessable("annotator is required".into()));
        }
        let mention = task.mention.clone().expect("projection tasks name a mention");
        let correction = Correction {
            action: req.action,
            mention,
            span: req.span,
            annotator: req.annotator.clone(),
            timestamp: 0,
        }
        .normalized();

        let previous = self.corrections.iter().rev().find(|r| r.task_id.as_deref() == Some(task.task_id.as_str()));
        if let Some(prev) = previous {
            let same = Correction { timestamp: 0, ..prev.correction.normalized() };
            if same == correction {
                return Ok(prev.clone());
            }
            if !req.override_done {
                return Err(ApiError::Conflict(format!("task {} is already done; resubmit with override=true", task.task_id)));
            }
        }
        if let Some(Anchor::Span { start, end, .. }) = correction.span {
            if end <= start {
                return Err(ApiError::Unprocessable(format!("span end {end} must exceed start {start}")));
            }
        }
        let view = self.corrected(&task.doc_id, Some(&correction)).map_err(ApiError::Unprocessable)?;

        let record = CorrectionRecord {
            doc_id: task.doc_id.clone(),
            task_id: Some(task.task_id.clone()),
            supersedes: previous.is_some(),
            correction: Correction { timestamp: self.next_timestamp(), ..correction },
        };
        append_line(&self.dir.join(CORRECTION_LOG), &canonical_json(&record))?;
        self.corrections.push(record.clone());
        self.views.insert(task.doc_id.clone(), view);
        self.mark_done(&task.task_id);
        Ok(record)
    }

    /// Records an adjudication decision. Returns the stored record.
    pub fn submit_decision(&mut self, req: DecisionRequest) -> Result<DecisionRecord, ApiError> {
        let task = self.open_task(&req.task_id, TaskKind::Adjudication)?.clone();
        if req.annotator.trim().is_empty() {
            return Err(ApiError::Unprocessable("annotator is required".into()));
        }
        let query = task.mention.clone().expect("adjudication tasks name a query");
        let decision = AdjudicationDecision { query, choice: req.choice.clone() };

        let previous = self.decisions.iter().rev().find(|r| r.task_id == task.task_id);
        if let Some(prev) = previous {
            if prev.decision == decision && prev.annotator == req.annotator {
                return Ok(prev.clone());
            }
            if !req.override_done {
                return Err(ApiError::Conflict(format!("task {} is already decided; resubmit with override=true", task.task_id)));
            }
        }
        let supersedes = previous.is_some();
        if let Choice::Relabel { answer } = &decision.choice {
            let mut triplets = self.merges[&task.doc_id].triplets.clone();
            if let Some(t) = triplets.iter_mut().find(|t| t.query == decision.query) {
                t.answer1 = answer.clone();
                t.answer2 = answer.clone();
            }
            validate_triplets(&triplets).map_err(|e| ApiError::Unprocessable(e.to_string()))?;
        }
        let view = self.decided(&task.doc_id, Some(&decision)).map_err(ApiError::Unprocessable)?;

        let record = DecisionRecord {
            doc_id: task.doc_id.clone(),
            task_id: task.task_id.clone(),
            annotator: req.annotator,
            timestamp: self.next_timestamp(),
            supersedes,
            decision,
        };
        append_line(&self.dir.join(DECISION_LOG), &canonical_json(&record))?;
        self.decisions.push(record.clone());
        self.merge_views.insert(task.doc_id.clone(), view);
        self.mark_done(&task.task_id);
        Ok(record)
    }
}
