use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::embed::{cosine, Embedder, LocalStubEmbedder};
use crate::model::{Claim, EvidenceItem};

fn default_top_k() -> usize {
    3
}

fn default_min_paragraph_chars() -> usize {
    40
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_min_paragraph_chars")]
    pub min_paragraph_chars: usize,
    /// Re-embed with the local stub when the configured embedder fails.
    #[serde(default = "default_true")]
    pub fallback_to_local: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            top_k: default_top_k(),
            min_paragraph_chars: default_min_paragraph_chars(),
            fallback_to_local: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SelectError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
}

fn blank_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\r?\n[ \t\r]*\n").expect("valid regex"))
}

/// Blank-line separated paragraphs of at least `min_chars` characters.
pub fn split_paragraphs(text: &str, min_chars: usize) -> Vec<String> {
    blank_line()
        .split(text)
        .map(str::trim)
        .filter(|p| p.chars().count() >= min_chars)
        .map(str::to_string)
        .collect()
}

/// Rewrite each item to its paragraph most similar to the claim and keep
/// the `top_k` best, highest similarity first. Ties keep input order.
pub async fn select_top_snippets(
    claim: &Claim,
    items: Vec<EvidenceItem>,
    embedder: &dyn Embedder,
    config: &SelectionConfig,
) -> Result<Vec<EvidenceItem>, SelectError> {
    if config.top_k == 0 {
        return Err(SelectError::InvalidK);
    }
    let paragraphs: Vec<Vec<String>> =
        items.iter().map(|i| split_paragraphs(&i.snippet, config.min_paragraph_chars)).collect();
    let total: usize = paragraphs.iter().map(Vec::len).sum();
    if total == 0 {
        return Ok(Vec::new());
    }

    let mut texts = Vec::with_capacity(total + 1);
    texts.push(claim.text().to_string());
    texts.extend(paragraphs.iter().flatten().cloned());

    let vectors = match embedder.embed(&texts).await {
        Ok(v) if v.len() == texts.len() => v,
        failure => {
            let reason = match failure {
                Err(e) => e.to_string(),
                Ok(v) => format!("expected {} vectors, got {}", texts.len(), v.len()),
            };
            if !config.fallback_to_local || embedder.is_local_stub() {
                return Err(SelectError::EmbedderUnavailable(reason));
            }
            tracing::warn!(%reason, "embedder failed; ranking with local stub");
            LocalStubEmbedder::new(embedder.dimension())
                .embed(&texts)
                .await
                .map_err(|e| SelectError::EmbedderUnavailable(e.to_string()))?
        }
    };

    let claim_vec = &vectors[0];
    let mut offset = 1;
    let mut ranked: Vec<(f64, usize, usize)> = Vec::new();
    for (item_idx, paras) in paragraphs.iter().enumerate() {
        let best = paras
            .iter()
            .enumerate()
            .map(|(p, _)| (cosine(claim_vec, &vectors[offset + p]), p))
            .fold(None, |acc: Option<(f64, usize)>, cur| match acc {
                Some(a) if a.0 >= cur.0 => Some(a),
                _ => Some(cur),
            });
        offset += paras.len();
        if let Some((sim, p)) = best {
            ranked.push((sim, item_idx, p));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.truncate(config.top_k);

    let mut items: Vec<Option<EvidenceItem>> = items.into_iter().map(Some).collect();
    Ok(ranked
        .into_iter()
        .map(|(sim, item_idx, p)| {
            let mut item = items[item_idx].take().expect("each item ranked once");
            item.snippet = paragraphs[item_idx][p].clone();
            item.similarity = Some(sim.clamp(0.0, 1.0));
            item
        })
        .collect())
}
