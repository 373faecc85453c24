use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mmc_core::ingest::{canonical_json, read_jsonl, AlignmentSet, ParallelDocument, UtteranceAlignment};
use mmc_core::merge::{AnnotationTriplet, Answer};
use mmc_core::model::{Anchor, Document, Mention, Utterance};
use mmc_core::projection::{apply_corrections, project_document, Correction, CorrectionRecord, ProjectionResult};
use mmc_review::{router, AdjudicationSet, ServeOptions, Store, ADJUDICATION, CORRECTION_LOG, PROJECTIONS};
use serde_json::{json, Value};
use tower::ServiceExt;

const DOC: &str = "s01e01c01.zh";

/// Twelve one-token mentions in a chain; only the first two tokens are
/// aligned, so ten mentions project to nothing.
fn projection() -> ProjectionResult {
    let mut source = Document::new("s01e01c01", "en");
    source.utterances = vec![Utterance::new("Ross", (0..12).map(|i| format!("w{i}")))];
    source.mentions = (0..12)
        .map(|i| {
            let m = Mention::span(format!("m{i}"), 0, i, i + 1);
            if i == 0 { m } else { m.with_antecedents([format!("m{}", i - 1)]) }
        })
        .collect();
    let mut target = Document::new(DOC, "zh");
    target.utterances = vec![Utterance::new("Ross", (0..12).map(|i| format!("t{i}")))];
    let parallel = ParallelDocument {
        source,
        targets: BTreeMap::from([("zh".to_string(), target)]),
        utterance_map: BTreeMap::from([("zh".to_string(), vec![Some(0)])]),
    };
    let alignments: AlignmentSet = [UtteranceAlignment { source_utt: 0, target_utt: 0, links: BTreeSet::from([(0, 0), (1, 1)]) }].into_iter().collect();
    project_document(&parallel, &alignments, "zh").unwrap()
}

fn adjudication() -> AdjudicationSet {
    let q = |i: usize, a1: Answer, a2: Answer| AnnotationTriplet::new(format!("q{i}"), Anchor::span(i, 0, 1), a1, a2);
    AdjudicationSet {
        doc_id: "s01e01c01".into(),
        triplets: vec![
            q(0, Answer::NoAntecedent, Answer::NoAntecedent),
            q(1, Answer::mention("q0"), Answer::NoAntecedent),
            q(2, Answer::mention("q1"), Answer::mention("q1")),
        ],
    }
}

fn seed(dir: &Path) {
    std::fs::write(dir.join(PROJECTIONS), format!("{}\n", canonical_json(&projection()))).unwrap();
    std::fs::write(dir.join(ADJUDICATION), format!("{}\n", canonical_json(&adjudication()))).unwrap();
}

fn app(dir: &Path) -> Router {
    let store = Store::open(dir).unwrap();
    router(Arc::new(RwLock::new(store)), &ServeOptions::default())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value, bytes)
}

fn proj_task(m: usize) -> String {
    format!("proj:{DOC}:m{m}")
}

#[tokio::test]
async fn null_projections_become_open_review_tasks() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let app = app(dir.path());
    let (status, page, _) = call(&app, "GET", "/api/tasks?kind=PROJECTION_REVIEW&status=OPEN", None).await;
    assert_eq!(status, StatusCode::OK);
    let tasks = page["tasks"].as_array().unwrap();
    assert_eq!(page["total"], 12);
    let nulls = tasks.iter().filter(|t| t["payload"]["predicted_span"].is_null()).count();
    assert_eq!(nulls, 10);
    assert!(tasks.iter().all(|t| t["status"] == "OPEN"));
}

#[tokio::test]
async fn paging_walks_every_task_once() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let app = app(dir.path());
    let mut seen = Vec::new();
    let mut uri = "/api/tasks?page_size=5".to_string();
    loop {
        let (status, page, _) = call(&app, "GET", &uri, None).await;
        assert_eq!(status, StatusCode::OK);
        seen.extend(page["tasks"].as_array().unwrap().iter().map(|t| t["task_id"].as_str().unwrap().to_string()));
        match page["next_page_token"].as_str() {
            Some(tok) => uri = format!("/api/tasks?page_size=5&page_token={tok}"),
            None => break,
        }
    }
    // twelve projection tasks plus one adjudication disagreement
    assert_eq!(seen.len(), 13);
    assert_eq!(seen.iter().collect::<BTreeSet<_>>().len(), 13);
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let app = app(dir.path());
    assert_eq!(call(&app, "GET", "/api/docs/nope", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/docs/a..b", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "GET", "/api/docs/a%2Fb", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "GET", "/api/tasks?page_token=!!", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "GET", "/api/tasks?kind=OTHER", None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "GET", "/api/tasks/proj:none:m0", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/health", None).await.0, StatusCode::OK);
}

#[tokio::test]
async fn corrections_close_tasks_and_replay_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let app = app(dir.path());
    let body = json!({"task_id": proj_task(5), "action": "ADDITION", "span": {"kind": "SPAN", "utt": 0, "start": 5, "end": 6}, "annotator": "a1"});
    let (status, first, _) = call(&app, "POST", "/api/corrections", Some(body.clone())).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, task, _) = call(&app, "GET", &format!("/api/tasks/{}", proj_task(5)), None).await;
    assert_eq!(task["status"], "DONE");

    let (status, again, _) = call(&app, "POST", "/api/corrections", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(first, again);
    let log: Vec<CorrectionRecord> = read_jsonl(dir.path().join(CORRECTION_LOG)).unwrap();
    assert_eq!(log.len(), 1);

    let other = json!({"task_id": proj_task(5), "action": "DELETION", "annotator": "a2"});
    assert_eq!(call(&app, "POST", "/api/corrections", Some(other.clone())).await.0, StatusCode::CONFLICT);
    let (status, rec, _) = call(&app, "POST", "/api/corrections?override=true", Some(other)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(rec["supersedes"], true);

    let empty = json!({"task_id": proj_task(6), "action": "ADDITION", "span": {"kind": "SPAN", "utt": 0, "start": 4, "end": 4}, "annotator": "a1"});
    assert_eq!(call(&app, "POST", "/api/corrections", Some(empty)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let outside = json!({"task_id": proj_task(6), "action": "ADDITION", "span": {"kind": "SPAN", "utt": 0, "start": 10, "end": 14}, "annotator": "a1"});
    assert_eq!(call(&app, "POST", "/api/corrections", Some(outside)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn served_document_matches_offline_replay() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let app = app(dir.path());
    for (m, start) in [(3, 3), (4, 4), (7, 7)] {
        let body = json!({"task_id": proj_task(m), "action": "ADDITION", "span": {"kind": "SPAN", "utt": 0, "start": start, "end": start + 1}, "annotator": "a1"});
        assert_eq!(call(&app, "POST", "/api/corrections", Some(body)).await.0, StatusCode::CREATED);
    }
    let del = json!({"task_id": proj_task(1), "action": "DELETION", "annotator": "a1"});
    assert_eq!(call(&app, "POST", "/api/corrections", Some(del)).await.0, StatusCode::CREATED);

    let (status, _, served) = call(&app, "GET", &format!("/api/docs/{DOC}"), None).await;
    assert_eq!(status, StatusCode::OK);
    let log: Vec<CorrectionRecord> = read_jsonl(dir.path().join(CORRECTION_LOG)).unwrap();
    let corrections: Vec<Correction> = log.into_iter().map(|r| r.correction).collect();
    let offline = apply_corrections(&projection(), &corrections).unwrap().document;
    assert_eq!(String::from_utf8(served).unwrap(), canonical_json(&offline));
    assert_eq!(offline.mentions.len(), 4);
}

#[tokio::test]
async fn restart_restores_statuses_and_drops_torn_line() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let before = {
        let app = app(dir.path());
        for m in [2, 9] {
            let body = json!({"task_id": proj_task(m), "action": "ADDITION", "span": {"kind": "SPAN", "utt": 0, "start": m, "end": m + 1}, "annotator": "a1"});
            assert_eq!(call(&app, "POST", "/api/corrections", Some(body)).await.0, StatusCode::CREATED);
        }
        let body = json!({"task_id": format!("adj:s01e01c01:q1"), "choice": "PICK_SECOND", "annotator": "adj"});
        assert_eq!(call(&app, "POST", "/api/adjudications", Some(body)).await.0, StatusCode::CREATED);
        call(&app, "GET", "/api/tasks?page_size=500", None).await.1
    };
    // simulate a crash in the middle of an append
    let mut f = std::fs::OpenOptions::new().append(true).open(dir.path().join(CORRECTION_LOG)).unwrap();
    std::io::Write::write_all(&mut f, b"{\"doc_id\":\"s01e01").unwrap();
    drop(f);

    let app = app(dir.path());
    let after = call(&app, "GET", "/api/tasks?page_size=500", None).await.1;
    assert_eq!(before, after);
    let done = after["tasks"].as_array().unwrap().iter().filter(|t| t["status"] == "DONE").count();
    assert_eq!(done, 3);
    let text = std::fs::read_to_string(dir.path().join(CORRECTION_LOG)).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.ends_with('\n'));
}

#[tokio::test]
async fn adjudication_decisions() {
    let dir = tempfile::tempdir().unwrap();
    seed(dir.path());
    let app = app(dir.path());
    let task = "adj:s01e01c01:q1";
    let (_, open, _) = call(&app, "GET", "/api/tasks?kind=ADJUDICATION", None).await;
    assert_eq!(open["total"], 1);
    assert_eq!(open["tasks"][0]["task_id"], task);

    let dangling = json!({"task_id": task, "choice": "RELABEL", "answer": {"type": "MENTION", "id": "q9"}, "annotator": "adj"});
    assert_eq!(call(&app, "POST", "/api/adjudications", Some(dangling)).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    let pick = json!({"task_id": task, "choice": "PICK_FIRST", "annotator": "adj"});
    assert_eq!(call(&app, "POST", "/api/adjudications", Some(pick)).await.0, StatusCode::CREATED);
    let (_, merged, _) = call(&app, "GET", "/api/merge/s01e01c01", None).await;
    assert!(merged["disagreements"].as_array().is_none_or(|d| d.is_empty()));

    let second = json!({"task_id": task, "choice": "PICK_SECOND", "annotator": "adj"});
    assert_eq!(call(&app, "POST", "/api/adjudications", Some(second.clone())).await.0, StatusCode::CONFLICT);
    assert_eq!(call(&app, "POST", "/api/adjudications?override=true", Some(second)).await.0, StatusCode::CREATED);
    assert_eq!(call(&app, "GET", "/api/merge/none", None).await.0, StatusCode::NOT_FOUND);
}
