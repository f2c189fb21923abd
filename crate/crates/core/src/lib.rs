//! Multilingual fact-checking: sentence segmentation, check-worthiness
//! detection, question decomposition, evidence retrieval, stance-based
//! verdicts, a REST service and an evaluation harness.

pub mod claim_detect;
pub mod evalkit;
pub mod evidence;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod provider;
pub mod query_gen;
pub mod segment;
pub mod service;
pub mod templates;
pub mod text;
pub mod verdict;

pub use model::{
    Claim, ClaimLabel, EvidenceItem, LanguageTag, Sentence, Span, StanceLabel, TagError, Verdict, VerdictLabel,
};
pub use pipeline::{ConfigError, FactCheckReport, Pipeline, PipelineConfig, PipelineError};
pub use provider::ProviderError;
pub use segment::{segment, SegmenterConfig};
