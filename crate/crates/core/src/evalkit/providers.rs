use std::collections::BTreeMap;
use std::sync::Arc;

use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::dataset::{EvalRecord, GoldLabel, Task};
use crate::claim_detect::heuristic_score;
use crate::model::{ClaimLabel, Sentence};
use crate::pipeline::Pipeline;

/// `None` marks an Uncertain prediction or a per-record provider error.
pub type Prediction = Option<GoldLabel>;

#[async_trait]
pub trait EvalProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Deterministic providers produce identical predictions on every run.
    fn is_deterministic(&self) -> bool;

    fn supports(&self, task: Task) -> bool;

    /// One prediction per record, in order. `run` is the 0-based repetition.
    async fn predict(&self, task: Task, records: &[EvalRecord], run: usize) -> Vec<Prediction>;
}

/// Returns the gold label.
pub struct OracleProvider;

#[async_trait]
impl EvalProvider for OracleProvider {
    fn name(&self) -> &str {
        "oracle"
    }
    fn is_deterministic(&self) -> bool {
        true
    }
    fn supports(&self, _: Task) -> bool {
        true
    }
    async fn predict(&self, _: Task, records: &[EvalRecord], _: usize) -> Vec<Prediction> {
        records.iter().map(|r| Some(r.gold)).collect()
    }
}

/// Always predicts the most frequent gold label of the data it was fitted on.
/// Ties go to the first label in [`Task::labels`] order.
pub struct MajorityProvider {
    label: BTreeMap<Task, GoldLabel>,
}

impl MajorityProvider {
    pub fn fit(records: &[EvalRecord]) -> Self {
        let mut counts: BTreeMap<GoldLabel, usize> = BTreeMap::new();
        for r in records {
            *counts.entry(r.gold).or_insert(0) += 1;
        }
        let label = [Task::ClaimDetection, Task::Veracity]
            .into_iter()
            .map(|task| {
                let labels = task.labels();
                let best = labels
                    .iter()
                    .copied()
                    .reduce(|best, l| if counts.get(&l) > counts.get(&best) { l } else { best })
                    .expect("two labels");
                (task, best)
            })
            .collect();
        Self { label }
    }

    pub fn label(&self, task: Task) -> GoldLabel {
        self.label[&task]
    }
}

#[async_trait]
impl EvalProvider for MajorityProvider {
    fn name(&self) -> &str {
        "majority"
    }
    fn is_deterministic(&self) -> bool {
        true
    }
    fn supports(&self, _: Task) -> bool {
        true
    }
    async fn predict(&self, task: Task, records: &[EvalRecord], _: usize) -> Vec<Prediction> {
        vec![Some(self.label(task)); records.len()]
    }
}

/// Uniform random labels; reproducible from (seed, run, record id, language).
pub struct SeededRandomProvider {
    seed: u64,
}

impl SeededRandomProvider {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn rng_for(&self, run: usize, record: &EvalRecord) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((run as u64).to_le_bytes());
        h.update(record.language.as_str().as_bytes());
        h.update([0]);
        h.update(record.id.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }
}

#[async_trait]
impl EvalProvider for SeededRandomProvider {
    fn name(&self) -> &str {
        "random"
    }
    fn is_deterministic(&self) -> bool {
        false
    }
    fn supports(&self, _: Task) -> bool {
        true
    }
    async fn predict(&self, task: Task, records: &[EvalRecord], run: usize) -> Vec<Prediction> {
        let labels = task.labels();
        records.iter().map(|r| Some(labels[self.rng_for(run, r).random_range(0..labels.len())])).collect()
    }
}

/// The stub check-worthiness heuristic. Claim detection only.
pub struct HeuristicProvider;

#[async_trait]
impl EvalProvider for HeuristicProvider {
    fn name(&self) -> &str {
        "heuristic"
    }
    fn is_deterministic(&self) -> bool {
        true
    }
    fn supports(&self, task: Task) -> bool {
        task == Task::ClaimDetection
    }
    async fn predict(&self, _: Task, records: &[EvalRecord], _: usize) -> Vec<Prediction> {
        records
            .iter()
            .map(|r| Some(ClaimLabel::from_score(heuristic_score(&r.text), crate::claim_detect::DEFAULT_THRESHOLD).into()))
            .collect()
    }
}

/// Runs the configured pipeline: its classifier for claim detection, full
/// claim verification for veracity.
pub struct PipelineProvider {
    pipeline: Arc<Pipeline>,
    deterministic: bool,
}

impl PipelineProvider {
    pub fn new(pipeline: Arc<Pipeline>, deterministic: bool) -> Self {
        Self { pipeline, deterministic }
    }
}

#[async_trait]
impl EvalProvider for PipelineProvider {
    fn name(&self) -> &str {
        "pipeline"
    }
    fn is_deterministic(&self) -> bool {
        self.deterministic
    }
    fn supports(&self, _: Task) -> bool {
        true
    }
    async fn predict(&self, task: Task, records: &[EvalRecord], _: usize) -> Vec<Prediction> {
        match task {
            Task::ClaimDetection => {
                let sentences: Vec<Sentence> =
                    records.iter().map(|r| Sentence::standalone(r.text.clone(), r.language.clone())).collect();
                match self.pipeline.classify_sentences(&sentences).await {
                    Ok(claims) => claims.into_iter().map(|c| Some(c.label.into())).collect(),
                    Err(e) => {
                        tracing::warn!(error = %e, "classifier failed; predictions marked uncertain");
                        vec![None; records.len()]
                    }
                }
            }
            Task::Veracity => {
                let mut out = Vec::with_capacity(records.len());
                for r in records {
                    let label = match self.pipeline.verify_text(&r.text, &r.language).await {
                        Ok(v) => GoldLabel::from_verdict(v.label),
                        Err(e) => {
                            tracing::warn!(id = %r.id, error = %e, "verification failed");
                            None
                        }
                    };
                    out.push(label);
                }
                out
            }
        }
    }
}
