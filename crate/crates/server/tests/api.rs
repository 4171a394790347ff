use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use genagg::graph::load_graph;
use genagg::qa::{Answer, AskOptions, Engine};
use genagg::qgen::{default_patterns, generate_items, GenerationConfig};
use genagg::tabulator::Design;
use genagg_server::{router, AppState, ServerConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

const FAMILY30: &[u8] = include_bytes!("fixtures/family30.ged");
const LINE20: &[u8] = include_bytes!("fixtures/line20.ged");

fn tree_dir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("family30.ged"), FAMILY30).unwrap();
    std::fs::write(dir.path().join("line20.ged"), LINE20).unwrap();
    std::fs::write(dir.path().join("broken.ged"), b"\0\x01\0\x02garbage").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"not a tree").unwrap();
    dir
}

fn loaded(dir: &Path) -> Arc<AppState> {
    let state = AppState::new(ServerConfig {
        trees: dir.to_owned(),
        ..Default::default()
    });
    state.load();
    state
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b)),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn ask(state: &Arc<AppState>, body: Value) -> (StatusCode, Value) {
    call(state, "POST", "/ask", Some(body.to_string())).await
}

#[tokio::test]
async fn lists_trees_and_failures() {
    let dir = tree_dir();
    let state = loaded(dir.path());
    let (status, body) = call(&state, "GET", "/trees", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], 1);
    let trees = body["trees"].as_array().unwrap();
    let ids: Vec<&str> = trees.iter().map(|t| t["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["broken", "family30", "line20"]);
    assert!(trees[0]["error"].is_string());
    assert_eq!(trees[1]["person_count"], 30);
    assert_eq!(trees[2]["person_count"], 60);
    // The founder and every wife who married into the line.
    let roots = trees[2]["roots"].as_array().unwrap();
    assert_eq!((roots.len(), &roots[0]), (21, &json!("@H0@")));
    assert_eq!(trees[1]["designs"], json!(["1t", "raw", "rel", "agg", "event", "6nf"]));

    let (_, health) = call(&state, "GET", "/health", None).await;
    assert_eq!(health["status"], "degraded");
    assert_eq!(health["trees"], 2);
    assert!(health["message"].as_str().unwrap().contains("broken"));
}

#[tokio::test]
async fn empty_directory_is_ready() {
    let dir = tempfile::tempdir().unwrap();
    let state = loaded(dir.path());
    let (_, body) = call(&state, "GET", "/trees", None).await;
    assert_eq!(body["trees"], json!([]));
    let (_, health) = call(&state, "GET", "/health", None).await;
    assert_eq!(health, json!({"version": 1, "status": "ready", "trees": 0}));
}

#[tokio::test]
async fn loading_then_missing_directory() {
    let state = AppState::new(ServerConfig {
        trees: "/nonexistent/trees".into(),
        ..Default::default()
    });
    let (_, health) = call(&state, "GET", "/health", None).await;
    assert_eq!(health["status"], "loading");
    let (status, body) = ask(&state, json!({"tree_id": "x", "question": "How many people are there?"})).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(body["error"]["kind"], "loading");

    state.load();
    let (_, health) = call(&state, "GET", "/health", None).await;
    assert_eq!(health["status"], "degraded");
    assert!(health["message"].as_str().unwrap().contains("/nonexistent/trees"));
}

#[tokio::test]
async fn answers_match_the_engine() {
    let dir = tree_dir();
    let state = loaded(dir.path());
    let (graph, _) = load_graph(FAMILY30).unwrap();
    let engine = Engine::new(graph, Design::SixNF).unwrap();
    let config = GenerationConfig {
        max_conditions: 1,
        ..Default::default()
    };
    let items = generate_items(engine.dataset(), &default_patterns(), &config).unwrap();
    let mut checked = 0;
    for item in items.iter().step_by(97).take(12) {
        let expected = engine.answer(&item.question, &AskOptions::default());
        let (status, body) = ask(&state, json!({"tree_id": "family30", "question": item.question})).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["design"], "6nf");
        let got: Answer = serde_json::from_value(body["answer"].clone()).unwrap();
        assert_eq!(got, expected, "{}", item.question);
        if let Answer::Value { value, trace } = &got {
            assert_eq!(*value, item.answer);
            assert_eq!(trace.spec, item.spec);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[tokio::test]
async fn identical_requests_identical_responses() {
    let dir = tree_dir();
    let state = loaded(dir.path());
    let body = json!({"tree_id": "family30", "question": "What is the portion of women that worked as a dressmaker?", "design": "agg"});
    let first = ask(&state, body.clone()).await;
    assert_eq!(first.0, StatusCode::OK);
    assert_eq!(first.1["answer"]["kind"], "value");
    let rest = futures_join(&state, body, 8).await;
    for r in rest {
        assert_eq!(r, first);
    }
}

async fn futures_join(state: &Arc<AppState>, body: Value, n: usize) -> Vec<(StatusCode, Value)> {
    let handles: Vec<_> = (0..n)
        .map(|_| {
            let state = state.clone();
            let body = body.clone();
            tokio::spawn(async move { ask(&state, body).await })
        })
        .collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

#[tokio::test]
async fn degree_prompt_then_resubmit() {
    let dir = tree_dir();
    let state = loaded(dir.path());
    let q = "What is the average age of people?";
    let (status, body) = ask(&state, json!({"tree_id": "line20", "question": q, "design": "agg"})).await;
    assert_eq!(status, StatusCode::OK);
    let answer = &body["answer"];
    assert_eq!(answer["kind"], "needs_degree_reduction");
    assert!(answer["token_count"].as_u64().unwrap() > answer["budget"].as_u64().unwrap());
    let degrees: Vec<u64> = serde_json::from_value(answer["degrees"].clone()).unwrap();
    assert!(!degrees.is_empty());

    let (_, body) = ask(
        &state,
        json!({"tree_id": "line20", "question": q, "design": "agg", "degree": degrees[0], "source": "@H0@"}),
    )
    .await;
    assert_eq!(body["answer"]["kind"], "value");
    assert_eq!(body["answer"]["trace"]["degree"], degrees[0]);
    assert!(body["answer"]["trace"]["token_count"].as_u64().unwrap() <= 512);
}

#[tokio::test]
async fn unanswerable_is_a_normal_response() {
    let dir = tree_dir();
    let state = loaded(dir.path());
    let (status, body) = ask(&state, json!({"tree_id": "family30", "question": "What colour is the sky?"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["answer"]["kind"], "unanswerable");
    assert_eq!(body["answer"]["reason"]["kind"], "parse");
}

#[tokio::test]
async fn request_errors() {
    let dir = tree_dir();
    let state = loaded(dir.path());
    let q = "How many people are there?";
    let cases = [
        (json!({"tree_id": "nope", "question": q}), StatusCode::NOT_FOUND, "not_found"),
        (json!({"tree_id": "broken", "question": q}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        (json!({"tree_id": "family30", "question": "  "}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        (json!({"tree_id": "family30", "question": q, "k": 0}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        (json!({"tree_id": "family30", "question": q, "design": "7nf"}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        (json!({"tree_id": "family30"}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        (json!({"tree_id": "family30", "question": q, "degre": 2}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        (json!({"tree_id": "family30", "question": q, "degree": -1}), StatusCode::UNPROCESSABLE_ENTITY, "validation"),
    ];
    for (body, status, kind) in cases {
        let (got, resp) = ask(&state, body.clone()).await;
        assert_eq!(got, status, "{body}");
        assert_eq!(resp["error"]["kind"], kind, "{body}");
        assert_eq!(resp["version"], 1);
    }
    let (status, resp) = call(&state, "POST", "/ask", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(resp["error"]["kind"], "validation");
}
