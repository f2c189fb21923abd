//! Remote providers against in-process mock HTTP servers.

mod common;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use common::*;
use factcheck_core::claim_detect::{heuristic_score, ClassifierKind};
use factcheck_core::evidence::{
    Connector, EmbeddingProvider, HttpSearch, LocalStubEmbedder, SearchBackend, SearchConnector, StubSearch,
};
use factcheck_core::provider::JsonEndpoint;
use factcheck_core::verdict::{keyword_stance, NliKind};
use factcheck_core::{Pipeline, PipelineConfig, ProviderError, StanceLabel, VerdictLabel};
use serde_json::{json, Value};

const TOKEN: &str = "s3cret-token";

#[derive(Default)]
struct Seen {
    calls: BTreeMap<String, usize>,
    unauthorized: usize,
}

type Shared = Arc<Mutex<Seen>>;

fn note(seen: &Shared, route: &str, headers: &HeaderMap) {
    let mut s = seen.lock().unwrap();
    *s.calls.entry(route.to_string()).or_default() += 1;
    let auth = headers.get("authorization").and_then(|v| v.to_str().ok());
    if auth != Some(&format!("Bearer {TOKEN}")) {
        s.unauthorized += 1;
    }
}

async fn score(State(seen): State<Shared>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    note(&seen, "score", &headers);
    let scores: Vec<f64> = body["sentences"].as_array().unwrap().iter().map(|s| heuristic_score(s.as_str().unwrap())).collect();
    Json(json!({ "scores": scores }))
}

async fn nli(State(seen): State<Shared>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    note(&seen, "nli", &headers);
    let stance = keyword_stance(body["claim"].as_str().unwrap(), body["evidence"].as_str().unwrap());
    Json(json!({ "stance": stance, "confidence": 0.9 }))
}

async fn generate(State(seen): State<Shared>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    note(&seen, "llm", &headers);
    assert_eq!(body["temperature"], 0.2);
    Json(json!({ "text": "" }))
}

async fn embed(State(seen): State<Shared>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    note(&seen, "embed", &headers);
    let stub = LocalStubEmbedder::new(16);
    let v: Vec<Vec<f64>> = body["texts"].as_array().unwrap().iter().map(|t| stub.embed_one(t.as_str().unwrap())).collect();
    Json(json!({ "embeddings": v }))
}

async fn search(State(seen): State<Shared>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    note(&seen, "search", &headers);
    let hits = StubSearch::bundled("web-a")
        .search(body["query"].as_str().unwrap(), body["max_results"].as_u64().unwrap() as usize)
        .await
        .unwrap();
    Json(json!({ "results": hits }))
}

async fn spawn(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

async fn mock_providers() -> (String, Shared) {
    let seen = Shared::default();
    let app = Router::new()
        .route("/score", post(score))
        .route("/nli", post(nli))
        .route("/llm", post(generate))
        .route("/embed", post(embed))
        .route("/search", post(search))
        .with_state(seen.clone());
    (spawn(app).await, seen)
}

fn remote_config(base: &str) -> PipelineConfig {
    // one variable per test binary; set before any provider reads it
    unsafe { std::env::set_var("FACTCHECK_MOCK_KEY", TOKEN) };
    let key = Some("FACTCHECK_MOCK_KEY".to_string());
    let mut cfg = PipelineConfig::stub();
    cfg.classifier.kind = ClassifierKind::RemoteModel;
    cfg.classifier.endpoint = Some(format!("{base}/score"));
    cfg.classifier.api_key_env = key.clone();
    cfg.nli.kind = NliKind::RemoteModel;
    cfg.nli.endpoint = Some(format!("{base}/nli"));
    cfg.nli.api_key_env = key.clone();
    cfg.llm.name = "mock-model".into();
    cfg.llm.endpoint = format!("{base}/llm");
    cfg.llm.api_key_env = key.clone();
    cfg.embedder = EmbeddingProvider { endpoint: format!("{base}/embed"), dimension: 16, api_key_env: key.clone(), timeout_ms: 5000 };
    cfg.connectors = vec![SearchConnector {
        endpoint: format!("{base}/search"),
        api_key_env: key,
        requests_per_second: Some(1000),
        ..SearchConnector::stub("web-a")
    }];
    cfg
}

#[tokio::test]
async fn full_pipeline_over_http() {
    let (base, seen) = mock_providers().await;
    let p = Pipeline::from_config(&remote_config(&base)).unwrap();
    let r = p.run_pipeline(&document(), &en()).await.unwrap();
    assert!(r.is_consistent());
    // the mock classifier mirrors the heuristic, so detection matches the golden run
    assert_eq!(r.claims, golden().claims);
    assert!(r.verdicts.iter().all(|v| v.error.is_none()));
    let wall = &r.verdicts[1];
    assert_eq!(wall.label, VerdictLabel::Refuted);
    assert!(wall.evidence.iter().all(|e| e.stance == Some(StanceLabel::Refutes)));
    // empty generations fall back to the extractive justification
    assert!(wall.justification.as_deref().unwrap().contains("far too narrow"));

    let s = seen.lock().unwrap();
    assert_eq!(s.unauthorized, 0);
    for route in ["score", "nli", "llm", "embed", "search"] {
        assert!(s.calls.get(route).copied().unwrap_or(0) > 0, "{route} never called");
    }
}

#[tokio::test]
async fn health_reports_remote_reachability() {
    let (base, _) = mock_providers().await;
    let p = Pipeline::from_config(&remote_config(&base)).unwrap();
    assert_eq!(p.health().await.status, "ok");

    let dead = remote_config("http://127.0.0.1:9");
    let h = Pipeline::from_config(&dead).unwrap().health().await;
    assert_eq!(h.status, "degraded");
    assert_eq!(h.providers["search:web-a"], "unreachable");
}

#[tokio::test]
async fn missing_secret_fails_at_startup() {
    let mut cfg = remote_config("http://127.0.0.1:9");
    cfg.nli.api_key_env = Some("FACTCHECK_SURELY_UNSET_VARIABLE".into());
    let err = Pipeline::from_config(&cfg).unwrap_err().to_string();
    assert!(err.contains("FACTCHECK_SURELY_UNSET_VARIABLE"), "{err}");
}

async fn respond(State(mode): State<&'static str>) -> (StatusCode, String) {
    match mode {
        "500" => (StatusCode::INTERNAL_SERVER_ERROR, "boom".into()),
        "429" => (StatusCode::TOO_MANY_REQUESTS, "slow down".into()),
        "404" => (StatusCode::NOT_FOUND, "nope".into()),
        "garbage" => (StatusCode::OK, "{\"results\": 7}".into()),
        "slow" => {
            tokio::time::sleep(Duration::from_secs(5)).await;
            (StatusCode::OK, "{\"results\": []}".into())
        }
        _ => unreachable!(),
    }
}

#[tokio::test]
async fn http_status_mapping() {
    for (mode, unavailable) in [("500", true), ("429", true), ("slow", true), ("404", false), ("garbage", false)] {
        let base = spawn(Router::new().route("/", post(respond).get(|| async { "up" })).with_state(mode)).await;
        let backend = HttpSearch::new(JsonEndpoint::new(format!("{base}/"), Duration::from_millis(300)).unwrap());
        let err = backend.search("q", 3).await.unwrap_err();
        match err {
            ProviderError::Unavailable(_) => assert!(unavailable, "{mode}: {err}"),
            ProviderError::MalformedResponse(_) => assert!(!unavailable, "{mode}: {err}"),
        }
        assert!(backend.healthy().await, "{mode}");
    }
}

#[tokio::test]
async fn embedder_dimension_is_checked() {
    let (base, _) = mock_providers().await;
    let wrong = EmbeddingProvider { endpoint: format!("{base}/embed"), dimension: 8, api_key_env: None, timeout_ms: 2000 };
    let e = wrong.connect().unwrap();
    assert!(matches!(e.embed(&["hello world".into()]).await, Err(ProviderError::MalformedResponse(_))));
    let right = EmbeddingProvider { dimension: 16, ..wrong };
    let v = right.connect().unwrap().embed(&["hello world".into()]).await.unwrap();
    assert_eq!(v[0], LocalStubEmbedder::new(16).embed_one("hello world"));
}

#[tokio::test]
async fn remote_connector_rate_limit_still_completes() {
    let (base, seen) = mock_providers().await;
    let cfg = SearchConnector { endpoint: format!("{base}/search"), requests_per_second: Some(20), ..SearchConnector::stub("web-a") };
    let c = Connector::from_config(cfg).unwrap();
    let qs = factcheck_core::query_gen::QuestionSet::verbatim("Water boils at 100 degrees Celsius at sea level.");
    let permits = tokio::sync::Semaphore::new(8);
    let hits = factcheck_core::evidence::search_all(&qs, &[c], &permits).await.unwrap();
    assert!(!hits.is_empty());
    assert_eq!(seen.lock().unwrap().calls["search"], 1);
}
