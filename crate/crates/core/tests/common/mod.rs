#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use factcheck_core::evidence::{Connector, SearchBackend, SearchHit};
use factcheck_core::{FactCheckReport, LanguageTag, Pipeline, ProviderError};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_report.json")
}

pub fn document() -> String {
    std::fs::read_to_string(fixture("document.txt")).expect("fixture document")
}

pub fn en() -> LanguageTag {
    LanguageTag::parse("en").unwrap()
}

/// Pretty JSON of the report with timings zeroed.
pub fn report_json(report: &FactCheckReport) -> String {
    serde_json::to_string_pretty(&report.without_timings()).unwrap() + "\n"
}

pub fn golden_json() -> String {
    std::fs::read_to_string(golden_path()).expect("golden report; regenerate with UPDATE_GOLDEN=1")
}

pub fn golden() -> FactCheckReport {
    serde_json::from_str(&golden_json()).unwrap()
}

/// Wrap every connector's backend.
pub fn wrap_connectors(pipeline: Pipeline, wrap: impl Fn(Arc<dyn SearchBackend>) -> Arc<dyn SearchBackend>) -> Pipeline {
    let connectors: Vec<Connector> =
        pipeline.connectors().iter().cloned().map(|c| { let b = wrap(c.backend().clone()); c.with_backend(b) }).collect();
    pipeline.with_connectors(connectors)
}

/// Fails every query that mentions `marker` (case-insensitive).
pub struct FailOnMarker {
    pub inner: Arc<dyn SearchBackend>,
    pub marker: String,
}

#[async_trait]
impl SearchBackend for FailOnMarker {
    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
        if query.to_lowercase().contains(&self.marker.to_lowercase()) {
            return Err(ProviderError::unavailable("injected fault"));
        }
        self.inner.search(query, max_results).await
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}

/// Counts queries reaching the wrapped backend.
pub struct Counting {
    pub inner: Arc<dyn SearchBackend>,
    pub calls: Arc<AtomicUsize>,
}

impl Counting {
    pub fn wrap(calls: &Arc<AtomicUsize>) -> impl Fn(Arc<dyn SearchBackend>) -> Arc<dyn SearchBackend> + '_ {
        move |inner| Arc::new(Counting { inner, calls: calls.clone() })
    }
}

#[async_trait]
impl SearchBackend for Counting {
    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.search(query, max_results).await
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}
