use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::Task;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub scored: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageScores {
    pub macro_f1: f64,
    pub micro_f1: f64,
    /// Runs that contributed to the means.
    pub n_runs: usize,
    pub per_run_scores: Vec<RunScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub provider: String,
    pub uncertain_as_wrong: bool,
    pub languages: BTreeMap<String, LanguageScores>,
    /// Languages left out because no record was ever scored.
    #[serde(default)]
    pub excluded_languages: Vec<String>,
    pub mean_macro_f1: f64,
    pub mean_micro_f1: f64,
}

impl EvalReport {
    /// Rows sorted by macro-F1 descending, then language.
    pub fn sorted_rows(&self) -> Vec<(&str, &LanguageScores)> {
        let mut rows: Vec<_> = self.languages.iter().map(|(l, s)| (l.as_str(), s)).collect();
        rows.sort_by(|a, b| b.1.macro_f1.total_cmp(&a.1.macro_f1).then_with(|| a.0.cmp(b.0)));
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" | "markdown-table" => Ok(Self::Markdown),
            other => Err(format!("unknown report format {other:?}; expected json, csv or markdown")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
}

pub const CSV_COLUMNS: [&str; 5] = ["language", "task", "macro_f1", "micro_f1", "n_runs"];

pub fn write_report<W: Write>(report: &EvalReport, format: ReportFormat, mut out: W) -> Result<(), ReportError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for (lang, s) in report.sorted_rows() {
                w.write_record([
                    lang,
                    report.task.as_str(),
                    &s.macro_f1.to_string(),
                    &s.micro_f1.to_string(),
                    &s.n_runs.to_string(),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Markdown => {
            writeln!(out, "| {} |", CSV_COLUMNS.join(" | "))?;
            writeln!(out, "|---|---|---:|---:|---:|")?;
            for (lang, s) in report.sorted_rows() {
                writeln!(out, "| {lang} | {} | {:.4} | {:.4} | {} |", report.task, s.macro_f1, s.micro_f1, s.n_runs)?;
            }
        }
    }
    Ok(())
}

pub fn emit_report(report: &EvalReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_report(report, format, file)
}

pub fn read_json_report(text: &str) -> Result<EvalReport, ReportError> {
    Ok(serde_json::from_str(text)?)
}
