//! Datasets, F1 metrics, multi-run per-language evaluation and reports.

mod dataset;
mod metrics;
mod providers;
mod report;

use std::collections::BTreeMap;

pub use self::dataset::{
    load_dataset, parse_dataset, DatasetError, DatasetSummary, EvalRecord, GoldLabel, Split, Task,
};
pub use self::metrics::{f1_scores, ClassCounts, ConfusionCounts, F1Scores, MetricError};
pub use self::providers::{
    EvalProvider, HeuristicProvider, MajorityProvider, OracleProvider, PipelineProvider, Prediction,
    SeededRandomProvider,
};
pub use self::report::{
    emit_report, read_json_report, write_report, EvalReport, LanguageScores, ReportError, ReportFormat, RunScore,
    CSV_COLUMNS,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Score Uncertain predictions as wrong instead of dropping them.
    pub uncertain_as_wrong: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    NoRecords,
    #[error("n_runs must be at least 1")]
    InvalidRuns,
    #[error("record {id:?} belongs to task {found}, not {expected}")]
    WrongTask { id: String, expected: Task, found: Task },
    #[error("provider {provider} does not support task {task}")]
    Unsupported { provider: String, task: Task },
    #[error("provider returned {got} predictions for {expected} records")]
    PredictionCount { expected: usize, got: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn score_run(records: &[&EvalRecord], preds: &[Prediction], options: EvalOptions) -> Result<Option<RunScore>, EvalError> {
    let mut gold = Vec::with_capacity(records.len());
    let mut pred = Vec::with_capacity(records.len());
    let mut excluded = 0;
    for (r, p) in records.iter().zip(preds) {
        match (p, options.uncertain_as_wrong) {
            (Some(p), _) => {
                gold.push(r.gold);
                pred.push(*p);
            }
            (None, true) => {
                gold.push(r.gold);
                pred.push(r.gold.complement());
            }
            (None, false) => excluded += 1,
        }
    }
    if gold.is_empty() {
        return Ok(None);
    }
    let s = f1_scores(&gold, &pred)?;
    Ok(Some(RunScore { macro_f1: s.macro_f1, micro_f1: s.micro_f1, scored: gold.len(), excluded }))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Group by language and score `n_runs` repetitions of the provider.
pub async fn evaluate(
    records: &[EvalRecord],
    provider: &dyn EvalProvider,
    task: Task,
    n_runs: usize,
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    if n_runs == 0 {
        return Err(EvalError::InvalidRuns);
    }
    if !provider.supports(task) {
        return Err(EvalError::Unsupported { provider: provider.name().into(), task });
    }
    if let Some(r) = records.iter().find(|r| r.task != task) {
        return Err(EvalError::WrongTask { id: r.id.clone(), expected: task, found: r.task });
    }
    let runs = n_runs;

    let mut by_language: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        by_language.entry(r.language.to_string()).or_default().push(r);
    }

    let per_language = futures::future::join_all(by_language.iter().map(|(lang, recs)| async move {
        let owned: Vec<EvalRecord> = recs.iter().map(|r| (*r).clone()).collect();
        let mut scores = Vec::with_capacity(runs);
        for run in 0..runs {
            let preds = provider.predict(task, &owned, run).await;
            if preds.len() != owned.len() {
                return Err(EvalError::PredictionCount { expected: owned.len(), got: preds.len() });
            }
            if let Some(s) = score_run(recs, &preds, options)? {
                scores.push(s);
            }
        }
        Ok::<_, EvalError>((lang.clone(), scores))
    }))
    .await;

    let mut languages = BTreeMap::new();
    let mut excluded_languages = Vec::new();
    for result in per_language {
        let (lang, scores) = result?;
        if scores.is_empty() {
            excluded_languages.push(lang);
            continue;
        }
        languages.insert(
            lang,
            LanguageScores {
                macro_f1: mean(scores.iter().map(|s| s.macro_f1)),
                micro_f1: mean(scores.iter().map(|s| s.micro_f1)),
                n_runs: scores.len(),
                per_run_scores: scores,
            },
        );
    }
    Ok(EvalReport {
        task,
        provider: provider.name().to_string(),
        uncertain_as_wrong: options.uncertain_as_wrong,
        mean_macro_f1: mean(languages.values().map(|s| s.macro_f1)),
        mean_micro_f1: mean(languages.values().map(|s| s.micro_f1)),
        languages,
        excluded_languages,
    })
}
