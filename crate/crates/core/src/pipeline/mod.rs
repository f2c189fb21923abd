//! End-to-end orchestration: segment, detect, then for every check-worthy
//! claim decompose, search, drop blocklisted sources, deduplicate, select,
//! classify stance, vote, justify and correct.

mod cache;
mod config;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use futures::future::join_all;
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

pub use self::cache::VerdictCache;
pub use self::config::{ConfigError, Limits, PipelineConfig};

use crate::claim_detect::{detect_batched, DetectError, SentenceScorer};
use crate::evidence::{
    deduplicate, filter_blocklist, search_all, select_top_snippets, Blocklist, Connector, DedupConfig, Embedder,
    SelectionConfig,
};
use crate::llm::{LlmClient, LlmProvider};
use crate::model::{Claim, LanguageTag, Sentence, Verdict};
use crate::provider::fingerprint;
use crate::query_gen::decompose_or_fallback;
use crate::segment::{segment, SegmenterConfig};
use crate::templates::TemplateRegistry;
use crate::verdict::{aggregate, correct, justify, predict_stances, StanceClassifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactCheckReport {
    pub document: String,
    pub language: LanguageTag,
    pub claims: Vec<Claim>,
    pub verdicts: Vec<Verdict>,
    /// Milliseconds per stage, summed over claims.
    pub timings: BTreeMap<String, u64>,
    pub provider_versions: BTreeMap<String, String>,
}

impl FactCheckReport {
    /// Every verdict belongs to a check-worthy claim of this report and
    /// every check-worthy claim has exactly one verdict.
    pub fn is_consistent(&self) -> bool {
        let worthy: Vec<&Claim> = self.claims.iter().filter(|c| c.is_check_worthy()).collect();
        worthy.len() == self.verdicts.len()
            && worthy.iter().zip(&self.verdicts).all(|(c, v)| **c == v.claim && v.is_consistent())
    }

    /// Copy with all timings zeroed, for byte-level comparisons.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.timings.values_mut().for_each(|v| *v = 0);
        r
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("document has {chars} characters; the limit is {limit}")]
    DocumentTooLarge { chars: usize, limit: usize },
    #[error("claim detection failed: {0}")]
    Detection(#[from] DetectError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Reachability of every configured provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub providers: BTreeMap<String, String>,
}

const STAGES: &[&str] = &[
    "segment", "detect", "decompose", "search", "blocklist", "deduplicate", "select", "stance", "aggregate",
    "justify", "correct", "total",
];

#[derive(Default)]
struct StageClock(Mutex<BTreeMap<&'static str, Duration>>);

impl StageClock {
    fn add(&self, stage: &'static str, started: Instant) {
        *self.0.lock().expect("clock lock").entry(stage).or_default() += started.elapsed();
    }

    fn into_millis(self) -> BTreeMap<String, u64> {
        let spent = self.0.into_inner().expect("clock lock");
        STAGES
            .iter()
            .map(|s| (s.to_string(), spent.get(s).map_or(0, |d| d.as_millis() as u64)))
            .collect()
    }
}

pub struct Pipeline {
    segmenter: SegmenterConfig,
    scorer: Arc<dyn SentenceScorer>,
    threshold: f64,
    llm: Arc<dyn LlmClient>,
    llm_provider: LlmProvider,
    templates: TemplateRegistry,
    connectors: Vec<Connector>,
    embedder: Arc<dyn Embedder>,
    blocklist: Blocklist,
    nli: Arc<dyn StanceClassifier>,
    dedup: DedupConfig,
    selection: SelectionConfig,
    limits: Limits,
    search_permits: Arc<Semaphore>,
    cache: VerdictCache,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("connectors", &self.connectors)
            .field("limits", &self.limits)
            .finish_non_exhaustive()
    }
}

impl Pipeline {
    /// Resolve every provider, template, file and environment variable the
    /// config refers to. Fails fast on anything unresolvable.
    pub fn from_config(config: &PipelineConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let invalid = ConfigError::Invalid;

        let mut templates = TemplateRegistry::default();
        if let Some(dir) = &config.templates_dir {
            templates.load_dir(dir).map_err(|e| invalid(format!("templates_dir {}: {e}", dir.display())))?;
        }

        let mut segmenter = SegmenterConfig::default();
        for (tag, path) in &config.abbreviation_files {
            let tag = LanguageTag::parse(tag).map_err(|e| invalid(e.to_string()))?;
            segmenter
                .load_abbreviations(&tag, path)
                .map_err(|e| invalid(format!("abbreviations {}: {e}", path.display())))?;
        }

        let llm: Arc<dyn LlmClient> = config.llm.connect().map_err(|e| invalid(format!("llm: {e}")))?.into();
        let scorer = config
            .classifier
            .build(Some(llm.clone()), &templates)
            .map_err(|e| invalid(format!("classifier: {e}")))?;
        let nli = config.nli.build(Some(llm.clone()), &templates).map_err(|e| invalid(format!("nli: {e}")))?;
        let embedder: Arc<dyn Embedder> =
            config.embedder.connect().map_err(|e| invalid(format!("embedder: {e}")))?.into();
        let connectors = config
            .connectors
            .iter()
            .cloned()
            .map(Connector::from_config)
            .collect::<Result<Vec<_>, _>>()
            .map_err(invalid)?;

        let mut blocklist = match &config.blocklist_path {
            Some(path) => Blocklist::load(path).map_err(|e| invalid(format!("blocklist {}: {e}", path.display())))?,
            None => Blocklist::default(),
        };
        if !config.blocklist_domains.is_empty() {
            let extra = Blocklist::new(&config.blocklist_domains).map_err(|e| invalid(e.to_string()))?;
            blocklist.merge(extra);
        }

        Ok(Self {
            segmenter,
            scorer,
            threshold: config.classifier.decision_threshold,
            llm,
            llm_provider: config.llm.clone(),
            templates,
            connectors,
            embedder,
            blocklist,
            nli,
            dedup: config.dedup,
            selection: config.selection,
            limits: config.limits,
            search_permits: Arc::new(Semaphore::new(config.limits.search_concurrency)),
            cache: VerdictCache::new(Duration::from_secs(config.cache_ttl_seconds)),
        })
    }

    /// The all-stub pipeline.
    pub fn stub() -> Self {
        Self::from_config(&PipelineConfig::stub()).expect("stub config is valid")
    }

    pub fn connectors(&self) -> &[Connector] {
        &self.connectors
    }

    pub fn with_connectors(mut self, connectors: Vec<Connector>) -> Self {
        self.connectors = connectors;
        self
    }

    pub fn with_stance_classifier(mut self, nli: Arc<dyn StanceClassifier>) -> Self {
        self.nli = nli;
        self
    }

    pub fn with_llm(mut self, llm: Arc<dyn LlmClient>) -> Self {
        self.llm = llm;
        self
    }

    pub fn cache(&self) -> &VerdictCache {
        &self.cache
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn provider_versions(&self) -> BTreeMap<String, String> {
        let mut v = BTreeMap::new();
        v.insert("classifier".to_string(), self.scorer.fingerprint());
        v.insert("nli".to_string(), self.nli.fingerprint());
        v.insert("llm".to_string(), fingerprint([self.llm.fingerprint(), self.llm_provider.fingerprint()]));
        v.insert("embedder".to_string(), self.embedder.fingerprint());
        v.insert("blocklist".to_string(), self.blocklist.fingerprint());
        for c in &self.connectors {
            v.insert(format!("search:{}", c.engine_id()), c.fingerprint());
        }
        let templates: Vec<String> =
            self.templates.ids().filter_map(|id| self.templates.get(id).ok()).map(|t| t.fingerprint()).collect();
        v.insert("templates".to_string(), fingerprint(&templates));
        v
    }

    /// Everything a cached verdict depends on besides the claim itself.
    fn verification_fingerprint(&self) -> String {
        let mut parts: Vec<String> = self.provider_versions().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.push(format!("{:?}{:?}", self.dedup, self.selection));
        parts.push(self.threshold.to_string());
        fingerprint(&parts)
    }

    fn check_size(&self, document: &str) -> Result<(), PipelineError> {
        let chars = document.chars().count();
        if chars > self.limits.max_document_chars {
            return Err(PipelineError::DocumentTooLarge { chars, limit: self.limits.max_document_chars });
        }
        Ok(())
    }

    async fn detect_with(&self, document: &str, language: &LanguageTag, clock: &StageClock) -> Result<Vec<Claim>, PipelineError> {
        self.check_size(document)?;
        let t = Instant::now();
        let sentences = segment(document, language, &self.segmenter);
        clock.add("segment", t);
        let t = Instant::now();
        let claims = detect_batched(&sentences, &*self.scorer, self.threshold, self.limits.detect_batch_size).await?;
        clock.add("detect", t);
        Ok(claims)
    }

    /// Segment and classify only.
    pub async fn detect_claims(&self, document: &str, language: &LanguageTag) -> Result<Vec<Claim>, PipelineError> {
        self.detect_with(document, language, &StageClock::default()).await
    }

    /// Classify already-segmented sentences, bypassing the segmenter.
    pub async fn classify_sentences(&self, sentences: &[Sentence]) -> Result<Vec<Claim>, PipelineError> {
        Ok(detect_batched(sentences, &*self.scorer, self.threshold, self.limits.detect_batch_size).await?)
    }

    pub async fn run_pipeline(&self, document: &str, language: &LanguageTag) -> Result<FactCheckReport, PipelineError> {
        let started = Instant::now();
        let clock = StageClock::default();
        let claims = self.detect_with(document, language, &clock).await?;
        let fp = self.verification_fingerprint();
        let permits = Semaphore::new(self.limits.claim_concurrency);
        let mut calls = Vec::new();
        for claim in claims.iter().filter(|c| c.is_check_worthy()) {
            let (permits, fp, clock) = (&permits, &fp, &clock);
            calls.push(async move {
                let _permit = permits.acquire().await.expect("semaphore is never closed");
                self.verify_with(claim, fp, clock).await
            });
        }
        let verdicts: Vec<Verdict> = join_all(calls).await;
        clock.add("total", started);
        Ok(FactCheckReport {
            document: document.to_string(),
            language: language.clone(),
            claims,
            verdicts,
            timings: clock.into_millis(),
            provider_versions: self.provider_versions(),
        })
    }

    /// Verify a single user-supplied claim. It is treated as check-worthy
    /// with score 1.
    pub async fn verify_text(&self, text: &str, language: &LanguageTag) -> Result<Verdict, PipelineError> {
        self.check_size(text)?;
        let text = text.trim();
        let claim = Claim::new(Sentence::standalone(text, language.clone()), 1.0, self.threshold);
        Ok(self.verify_claim(&claim).await)
    }

    pub async fn verify_claim(&self, claim: &Claim) -> Verdict {
        self.verify_with(claim, &self.verification_fingerprint(), &StageClock::default()).await
    }

    async fn verify_with(&self, claim: &Claim, fp: &str, clock: &StageClock) -> Verdict {
        let key = VerdictCache::key(claim.text(), claim.language(), fp);
        if let Some(mut cached) = self.cache.lookup(&key) {
            cached.claim = claim.clone();
            return cached;
        }
        match self.verify_uncached(claim, clock).await {
            Ok(v) => {
                self.cache.store(key, &v);
                v
            }
            Err(e) => {
                tracing::warn!(claim = claim.text(), error = %e, "claim verification failed");
                Verdict::failed(claim.clone(), e)
            }
        }
    }

    async fn verify_uncached(&self, claim: &Claim, clock: &StageClock) -> Result<Verdict, String> {
        let t = Instant::now();
        let questions = decompose_or_fallback(claim, &*self.llm, &self.llm_provider, &self.templates)
            .await
            .map_err(|e| format!("decompose: {e}"))?;
        clock.add("decompose", t);

        let t = Instant::now();
        let hits = search_all(&questions, &self.connectors, &self.search_permits)
            .await
            .map_err(|e| format!("search: {e}"))?;
        clock.add("search", t);

        // Blocked sources go first so they can never absorb a credible
        // near-duplicate during deduplication.
        let t = Instant::now();
        let credible = filter_blocklist(hits, &self.blocklist);
        clock.add("blocklist", t);

        let t = Instant::now();
        let unique = deduplicate(credible, &*self.embedder, &self.dedup).await;
        clock.add("deduplicate", t);

        let t = Instant::now();
        let top = select_top_snippets(claim, unique, &*self.embedder, &self.selection)
            .await
            .map_err(|e| format!("select: {e}"))?;
        clock.add("select", t);

        let t = Instant::now();
        let with_stance = predict_stances(claim, top, &*self.nli, self.limits.stance_concurrency)
            .await
            .map_err(|e| format!("stance: {e}"))?;
        clock.add("stance", t);

        let t = Instant::now();
        let mut verdict = aggregate(claim, with_stance);
        clock.add("aggregate", t);

        if !verdict.evidence.is_empty() {
            let t = Instant::now();
            verdict.justification = justify(&verdict, &*self.llm, &self.llm_provider, &self.templates).await.ok();
            clock.add("justify", t);
            let t = Instant::now();
            verdict.correction = correct(&verdict, &*self.llm, &self.llm_provider, &self.templates).await;
            clock.add("correct", t);
        }
        Ok(verdict)
    }

    pub async fn health(&self) -> Health {
        let mut providers = BTreeMap::new();
        let status = |ok: bool| if ok { "ok" } else { "unreachable" }.to_string();
        providers.insert("classifier".into(), status(self.scorer.healthy().await));
        providers.insert("nli".into(), status(self.nli.healthy().await));
        providers.insert("llm".into(), status(self.llm.healthy().await));
        providers.insert("embedder".into(), status(self.embedder.healthy().await));
        for c in &self.connectors {
            providers.insert(format!("search:{}", c.engine_id()), status(c.backend().healthy().await));
        }
        let all_ok = providers.values().all(|s| s == "ok");
        Health { status: if all_ok { "ok" } else { "degraded" }.into(), providers }
    }
}
