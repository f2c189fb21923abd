use std::num::NonZeroU32;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use futures::future::join_all;
use governor::{DefaultDirectRateLimiter, Quota, RateLimiter};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::model::EvidenceItem;
use crate::provider::{fingerprint, JsonEndpoint, ProviderError, DEFAULT_TIMEOUT};
use crate::query_gen::QuestionSet;
use crate::text::content_words;

pub const DEFAULT_MAX_RESULTS: usize = 10;
pub const DEFAULT_SEARCH_CONCURRENCY: usize = 8;

const BUNDLED_CORPUS: &str = include_str!("../../fixtures/stub_corpus.json");

fn default_max_results() -> usize {
    DEFAULT_MAX_RESULTS
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

/// Configuration of one search engine. API keys are only ever read from
/// the environment variable named by `api_key_env`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConnector {
    pub engine_id: String,
    /// A URL, `"stub"` for the bundled corpus, or `"stub:<path>"`.
    pub endpoint: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    #[serde(default)]
    pub requests_per_second: Option<u32>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl SearchConnector {
    pub fn stub(engine_id: &str) -> Self {
        Self {
            engine_id: engine_id.into(),
            endpoint: "stub".into(),
            api_key_env: None,
            max_results: DEFAULT_MAX_RESULTS,
            requests_per_second: None,
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn is_stub(&self) -> bool {
        self.endpoint == "stub" || self.endpoint.starts_with("stub:")
    }
}

/// Common result schema shared by all engines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub title: String,
    pub url: String,
    pub snippet: String,
    pub rank: u32,
}

#[async_trait]
pub trait SearchBackend: Send + Sync {
    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchHit>, ProviderError>;

    fn fingerprint(&self) -> String;

    async fn healthy(&self) -> bool {
        true
    }
}

#[derive(Serialize)]
struct SearchRequest<'a> {
    query: &'a str,
    max_results: usize,
}

#[derive(Deserialize)]
struct SearchResponse {
    results: Vec<SearchHit>,
}

/// Wire: POST {"query", "max_results"} -> {"results": [{title, url, snippet, rank}]}.
pub struct HttpSearch {
    endpoint: JsonEndpoint,
}

impl HttpSearch {
    pub fn new(endpoint: JsonEndpoint) -> Self {
        Self { endpoint }
    }
}

#[async_trait]
impl SearchBackend for HttpSearch {
    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
        let resp: SearchResponse = self.endpoint.post(&SearchRequest { query, max_results }).await?;
        Ok(resp.results)
    }

    fn fingerprint(&self) -> String {
        fingerprint(["http-search", self.endpoint.url()])
    }

    async fn healthy(&self) -> bool {
        self.endpoint.probe().await
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub title: String,
    pub url: String,
    pub snippet: String,
    /// Engines that index this document; empty means all.
    #[serde(default)]
    pub engines: Vec<String>,
}

/// Offline search over a fixed corpus, ranked by content-word overlap.
#[derive(Debug, Clone)]
pub struct StubSearch {
    engine_id: String,
    docs: Vec<CorpusDoc>,
    corpus_fingerprint: String,
}

impl StubSearch {
    pub fn new(engine_id: &str, docs: Vec<CorpusDoc>) -> Self {
        let docs: Vec<CorpusDoc> = docs
            .into_iter()
            .filter(|d| d.engines.is_empty() || d.engines.iter().any(|e| e == engine_id))
            .collect();
        let corpus_fingerprint =
            fingerprint(docs.iter().flat_map(|d| [d.url.as_str(), d.title.as_str(), d.snippet.as_str()]));
        Self { engine_id: engine_id.to_string(), docs, corpus_fingerprint }
    }

    pub fn bundled(engine_id: &str) -> Self {
        let docs = serde_json::from_str(BUNDLED_CORPUS).expect("bundled corpus is valid JSON");
        Self::new(engine_id, docs)
    }

    pub fn from_file(engine_id: &str, path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let docs = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::new(engine_id, docs))
    }
}

#[async_trait]
impl SearchBackend for StubSearch {
    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
        let q = content_words(query);
        let need = q.len().min(2);
        if need == 0 {
            return Ok(Vec::new());
        }
        let mut scored: Vec<(usize, usize)> = self
            .docs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let words = content_words(&format!("{} {}", d.title, d.snippet));
                (q.intersection(&words).count(), i)
            })
            .filter(|(overlap, _)| *overlap >= need)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(scored
            .into_iter()
            .take(max_results)
            .enumerate()
            .map(|(rank, (_, i))| {
                let d = &self.docs[i];
                SearchHit { title: d.title.clone(), url: d.url.clone(), snippet: d.snippet.clone(), rank: rank as u32 + 1 }
            })
            .collect())
    }

    fn fingerprint(&self) -> String {
        fingerprint(["stub-search", self.engine_id.as_str(), self.corpus_fingerprint.as_str()])
    }
}

/// A configured engine plus its backend and optional rate limiter.
#[derive(Clone)]
pub struct Connector {
    pub config: SearchConnector,
    backend: Arc<dyn SearchBackend>,
    limiter: Option<Arc<DefaultDirectRateLimiter>>,
}

impl std::fmt::Debug for Connector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Connector").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Connector {
    pub fn new(config: SearchConnector, backend: Arc<dyn SearchBackend>) -> Self {
        let limiter = config
            .requests_per_second
            .and_then(NonZeroU32::new)
            .map(|rps| Arc::new(RateLimiter::direct(Quota::per_second(rps))));
        Self { config, backend, limiter }
    }

    /// Build the backend named by the config's endpoint.
    pub fn from_config(config: SearchConnector) -> Result<Self, String> {
        if config.max_results == 0 {
            return Err(format!("connector {}: max_results must be >= 1", config.engine_id));
        }
        let backend: Arc<dyn SearchBackend> = if config.endpoint == "stub" {
            Arc::new(StubSearch::bundled(&config.engine_id))
        } else if let Some(path) = config.endpoint.strip_prefix("stub:") {
            Arc::new(StubSearch::from_file(&config.engine_id, path)?)
        } else {
            let key = match &config.api_key_env {
                Some(var) => Some(std::env::var(var).map_err(|_| {
                    format!("connector {}: environment variable {var} is not set", config.engine_id)
                })?),
                None => None,
            };
            let endpoint = JsonEndpoint::new(&config.endpoint, Duration::from_millis(config.timeout_ms))
                .map_err(|e| format!("connector {}: {e}", config.engine_id))?
                .with_bearer(key);
            Arc::new(HttpSearch::new(endpoint))
        };
        Ok(Self::new(config, backend))
    }

    /// Replace the backend, keeping config and limiter.
    pub fn with_backend(mut self, backend: Arc<dyn SearchBackend>) -> Self {
        self.backend = backend;
        self
    }

    pub fn backend(&self) -> &Arc<dyn SearchBackend> {
        &self.backend
    }

    pub fn engine_id(&self) -> &str {
        &self.config.engine_id
    }

    pub fn fingerprint(&self) -> String {
        fingerprint([
            self.config.engine_id.as_str(),
            &self.config.max_results.to_string(),
            &self.backend.fingerprint(),
        ])
    }

    async fn query(&self, query: &str) -> Result<Vec<SearchHit>, ProviderError> {
        if let Some(limiter) = &self.limiter {
            limiter.until_ready().await;
        }
        let mut hits = self.backend.search(query, self.config.max_results).await?;
        hits.truncate(self.config.max_results);
        Ok(hits)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("no search connectors configured")]
    NoConnectors,
    #[error("every search connector failed: {0}")]
    AllConnectorsFailed(String),
}

/// Query every connector with every question, at most `permits` requests in
/// flight. Failed requests are skipped; output is ordered by
/// (engine_id, question index, rank) regardless of completion order.
pub async fn search_all(
    questions: &QuestionSet,
    connectors: &[Connector],
    permits: &Semaphore,
) -> Result<Vec<EvidenceItem>, SearchError> {
    if connectors.is_empty() {
        return Err(SearchError::NoConnectors);
    }
    let tasks = connectors.iter().flat_map(|c| {
        questions.questions.iter().enumerate().map(move |(qi, q)| async move {
            let _permit = permits.acquire().await.expect("semaphore never closed");
            (c, qi, c.query(q).await)
        })
    });
    let results = join_all(tasks).await;

    let mut failures = Vec::new();
    let mut succeeded = false;
    // (engine, question, rank, position) fixes the merge order
    type HitKey<'a> = (&'a str, usize, u32, usize);
    let mut keyed: Vec<(HitKey, EvidenceItem)> = Vec::new();
    for (connector, qi, result) in results {
        match result {
            Ok(hits) => {
                succeeded = true;
                for (pos, hit) in hits.into_iter().enumerate() {
                    match EvidenceItem::from_hit(&hit.url, hit.title, hit.snippet, connector.engine_id()) {
                        Ok(item) => keyed.push(((connector.engine_id(), qi, hit.rank, pos), item)),
                        Err(e) => tracing::debug!(engine = connector.engine_id(), error = %e, "dropping hit"),
                    }
                }
            }
            Err(e) => {
                tracing::warn!(engine = connector.engine_id(), question = qi, error = %e, "search failed");
                failures.push(format!("{}: {e}", connector.engine_id()));
            }
        }
    }
    if !succeeded {
        failures.dedup();
        return Err(SearchError::AllConnectorsFailed(failures.join("; ")));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, item)| item).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Fixed {
        engine: &'static str,
        n: u32,
        delay_ms: u64,
    }

    #[async_trait]
    impl SearchBackend for Fixed {
        async fn search(&self, query: &str, _: usize) -> Result<Vec<SearchHit>, ProviderError> {
            tokio::time::sleep(Duration::from_millis(self.delay_ms)).await;
            Ok((1..=self.n)
                .rev()
                .map(|rank| SearchHit {
                    title: format!("{} {query} {rank}", self.engine),
                    url: format!("https://{}.test/{}/{rank}", self.engine, query.len()),
                    snippet: "s".into(),
                    rank,
                })
                .collect())
        }
        fn fingerprint(&self) -> String {
            self.engine.into()
        }
    }

    struct Failing(AtomicUsize);

    #[async_trait]
    impl SearchBackend for Failing {
        async fn search(&self, _: &str, _: usize) -> Result<Vec<SearchHit>, ProviderError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(ProviderError::Unavailable("timeout".into()))
        }
        fn fingerprint(&self) -> String {
            "failing".into()
        }
    }

    fn connector(id: &str, backend: impl SearchBackend + 'static) -> Connector {
        Connector::new(SearchConnector::stub(id), Arc::new(backend))
    }

    fn two_questions() -> QuestionSet {
        QuestionSet { claim_text: "c".into(), questions: vec!["q one?".into(), "c".into()] }
    }

    #[tokio::test]
    async fn cardinality_and_canonical_order() {
        let connectors = vec![
            connector("web-b", Fixed { engine: "b", n: 3, delay_ms: 0 }),
            connector("web-a", Fixed { engine: "a", n: 3, delay_ms: 5 }),
        ];
        let out = search_all(&two_questions(), &connectors, &Semaphore::new(8)).await.unwrap();
        assert_eq!(out.len(), 12);
        let engines: Vec<_> = out.iter().map(|i| i.source_engine.as_str()).collect();
        assert_eq!(&engines[..6], ["web-a"; 6]);
        assert!(out[0].title.ends_with("q one? 1"));
        assert!(out[2].title.ends_with("q one? 3"));
        assert!(out[3].title.ends_with(" c 1"));
    }

    #[tokio::test]
    async fn partial_failure_is_tolerated() {
        let connectors = vec![
            connector("web-a", Failing(AtomicUsize::new(0))),
            connector("wiki", Fixed { engine: "w", n: 3, delay_ms: 0 }),
        ];
        let out = search_all(&two_questions(), &connectors, &Semaphore::new(1)).await.unwrap();
        assert_eq!(out.len(), 6);
        assert!(out.iter().all(|i| i.source_engine == "wiki"));
    }

    #[tokio::test]
    async fn all_down_is_an_error() {
        let connectors = vec![connector("a", Failing(AtomicUsize::new(0))), connector("b", Failing(AtomicUsize::new(0)))];
        let err = search_all(&two_questions(), &connectors, &Semaphore::new(8)).await.unwrap_err();
        assert!(matches!(err, SearchError::AllConnectorsFailed(_)));
        assert!(matches!(
            search_all(&two_questions(), &[], &Semaphore::new(8)).await,
            Err(SearchError::NoConnectors)
        ));
    }

    #[tokio::test]
    async fn bundled_stub_is_deterministic() {
        let c = Connector::from_config(SearchConnector::stub("web-a")).unwrap();
        let qs = QuestionSet::verbatim("The Eiffel Tower was completed in 1889.");
        let a = search_all(&qs, std::slice::from_ref(&c), &Semaphore::new(8)).await.unwrap();
        let b = search_all(&qs, &[c], &Semaphore::new(8)).await.unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    #[tokio::test]
    async fn stub_engine_filter() {
        let docs = vec![
            CorpusDoc { title: "Tower facts".into(), url: "https://a.org/1".into(), snippet: "tower height 330".into(), engines: vec!["wiki".into()] },
            CorpusDoc { title: "Tower news".into(), url: "https://b.org/1".into(), snippet: "tower height 330".into(), engines: vec![] },
        ];
        let wiki = StubSearch::new("wiki", docs.clone());
        let web = StubSearch::new("web-a", docs);
        assert_eq!(wiki.search("tower height", 10).await.unwrap().len(), 2);
        assert_eq!(web.search("tower height", 10).await.unwrap().len(), 1);
        assert!(web.search("the and", 10).await.unwrap().is_empty());
    }

    #[tokio::test]
    async fn missing_api_key_env_rejected() {
        let cfg = SearchConnector {
            endpoint: "http://127.0.0.1:9/search".into(),
            api_key_env: Some("FACTCHECK_TEST_SURELY_UNSET_KEY".into()),
            ..SearchConnector::stub("web-a")
        };
        assert!(Connector::from_config(cfg).is_err());
    }
}
