mod common;

use common::*;
use factcheck_core::{Pipeline, PipelineConfig, VerdictLabel};

async fn fresh_report_json() -> String {
    let report = Pipeline::stub().run_pipeline(&document(), &en()).await.unwrap();
    assert!(report.is_consistent());
    report_json(&report)
}

#[tokio::test]
async fn matches_golden_report() {
    let actual = fresh_report_json().await;
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &actual).unwrap();
    }
    assert_eq!(actual, golden_json());
}

#[tokio::test]
async fn golden_report_content() {
    let g = golden();
    assert_eq!(g.claims.len(), 7);
    let worthy = g.claims.iter().filter(|c| c.is_check_worthy()).count();
    assert_eq!(worthy, 5);
    assert_eq!(g.verdicts.len(), worthy);
    let labels: Vec<VerdictLabel> = g.verdicts.iter().map(|v| v.label).collect();
    use VerdictLabel::*;
    assert_eq!(labels, [Supported, Refuted, Supported, Uncertain, Supported]);
    let refuted = &g.verdicts[1];
    assert!(refuted.correction.is_some());
    assert!(g.verdicts.iter().flat_map(|v| &v.evidence).all(|e| !e.normalized_url.starts_with("fakenewsdaily.example")));
    for c in &g.claims {
        assert_eq!(c.sentence.span.slice(&g.document), c.sentence.text);
    }
}

#[tokio::test]
async fn repeated_runs_are_byte_identical() {
    let first = fresh_report_json().await;
    let pipeline = Pipeline::stub();
    for _ in 0..5 {
        let r = pipeline.run_pipeline(&document(), &en()).await.unwrap();
        assert_eq!(report_json(&r), first);
    }
}

#[tokio::test]
async fn bundled_toml_config_gives_the_same_verdicts() {
    let cfg = PipelineConfig::load(fixture("pipeline.toml")).unwrap();
    let from_file = Pipeline::from_config(&cfg).unwrap().run_pipeline(&document(), &en()).await.unwrap();
    let g = golden();
    assert_eq!(from_file.claims, g.claims);
    assert_eq!(from_file.verdicts, g.verdicts);
}

#[tokio::test]
async fn cached_rerun_equals_first_run() {
    let pipeline = Pipeline::stub();
    let a = pipeline.run_pipeline(&document(), &en()).await.unwrap();
    assert!(!pipeline.cache().is_empty());
    let b = pipeline.run_pipeline(&document(), &en()).await.unwrap();
    assert_eq!(report_json(&a), report_json(&b));
}
