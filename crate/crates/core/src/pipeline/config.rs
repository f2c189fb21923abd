use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::claim_detect::ClassifierProvider;
use crate::evidence::{DedupConfig, EmbeddingProvider, SearchConnector, SelectionConfig};
use crate::llm::LlmProvider;
use crate::verdict::NliProvider;

const BUNDLED_BLOCKLIST: &str = include_str!("../../fixtures/blocklist.txt");

fn default_max_document_chars() -> usize {
    50_000
}
fn default_claim_concurrency() -> usize {
    4
}
fn default_search_concurrency() -> usize {
    crate::evidence::DEFAULT_SEARCH_CONCURRENCY
}
fn default_stance_concurrency() -> usize {
    4
}
fn default_detect_batch_size() -> usize {
    32
}
fn default_cache_ttl() -> u64 {
    3600
}
fn default_connectors() -> Vec<SearchConnector> {
    ["factcheck-db", "web-a", "wiki"].into_iter().map(SearchConnector::stub).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_max_document_chars")]
    pub max_document_chars: usize,
    #[serde(default = "default_claim_concurrency")]
    pub claim_concurrency: usize,
    #[serde(default = "default_search_concurrency")]
    pub search_concurrency: usize,
    #[serde(default = "default_stance_concurrency")]
    pub stance_concurrency: usize,
    #[serde(default = "default_detect_batch_size")]
    pub detect_batch_size: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_document_chars: default_max_document_chars(),
            claim_concurrency: default_claim_concurrency(),
            search_concurrency: default_search_concurrency(),
            stance_concurrency: default_stance_concurrency(),
            detect_batch_size: default_detect_batch_size(),
        }
    }
}

/// Everything needed to assemble a [`super::Pipeline`]. Loaded from TOML;
/// secrets are referenced by environment variable name only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub classifier: ClassifierProvider,
    #[serde(default)]
    pub nli: NliProvider,
    #[serde(default = "LlmProvider::stub")]
    pub llm: LlmProvider,
    #[serde(default)]
    pub embedder: EmbeddingProvider,
    #[serde(default = "default_connectors")]
    pub connectors: Vec<SearchConnector>,
    #[serde(default)]
    pub blocklist_path: Option<PathBuf>,
    /// Extra blocked domains, merged with the file.
    #[serde(default)]
    pub blocklist_domains: Vec<String>,
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    /// Abbreviation list files keyed by language tag.
    #[serde(default)]
    pub abbreviation_files: BTreeMap<String, PathBuf>,
    #[serde(default = "default_cache_ttl")]
    pub cache_ttl_seconds: u64,
    #[serde(default)]
    pub dedup: DedupConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub limits: Limits,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            classifier: ClassifierProvider::default(),
            nli: NliProvider::default(),
            llm: LlmProvider::stub(),
            embedder: EmbeddingProvider::default(),
            connectors: default_connectors(),
            blocklist_path: None,
            blocklist_domains: Vec::new(),
            templates_dir: None,
            abbreviation_files: BTreeMap::new(),
            cache_ttl_seconds: default_cache_ttl(),
            dedup: DedupConfig::default(),
            selection: SelectionConfig::default(),
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    /// All-stub configuration with the bundled corpus and blocklist.
    pub fn stub() -> Self {
        let blocklist_domains = BUNDLED_BLOCKLIST
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Self { blocklist_domains, ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: PathBuf::from("<inline>"), source })
    }

    /// Load a TOML file; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.blocklist_path.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.templates_dir.as_mut() {
            resolve(p);
        }
        cfg.abbreviation_files.values_mut().for_each(resolve);
        for c in &mut cfg.connectors {
            if let Some(rest) = c.endpoint.strip_prefix("stub:") {
                let mut p = PathBuf::from(rest);
                resolve(&mut p);
                c.endpoint = format!("stub:{}", p.display());
            }
        }
        Ok(cfg)
    }

    /// Checks that need no I/O.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.classifier.validate().or_else(|e| invalid(format!("classifier: {e}")))?;
        self.nli.validate().or_else(|e| invalid(format!("nli: {e}")))?;
        self.llm.validate().or_else(invalid)?;
        if self.embedder.dimension == 0 {
            return invalid("embedder dimension must be positive".into());
        }
        if self.connectors.is_empty() {
            return invalid("at least one search connector is required".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for c in &self.connectors {
            if !ids.insert(c.engine_id.as_str()) {
                return invalid(format!("duplicate connector engine_id {:?}", c.engine_id));
            }
        }
        let l = &self.limits;
        if l.max_document_chars == 0
            || l.claim_concurrency == 0
            || l.search_concurrency == 0
            || l.stance_concurrency == 0
            || l.detect_batch_size == 0
        {
            return invalid("limits must all be positive".into());
        }
        if self.selection.top_k == 0 {
            return invalid("selection.top_k must be >= 1".into());
        }
        for t in [self.dedup.cosine_threshold, self.dedup.jaccard_threshold] {
            if !(0.0..=1.0).contains(&t) {
                return invalid(format!("dedup threshold {t} outside [0, 1]"));
            }
        }
        Ok(())
    }
}
