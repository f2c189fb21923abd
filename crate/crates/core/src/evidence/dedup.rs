use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::embed::{char_trigrams, cosine, Embedder};
use crate::model::EvidenceItem;

fn default_cosine() -> f64 {
    0.90
}

fn default_jaccard() -> f64 {
    0.80
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    #[serde(default = "default_cosine")]
    pub cosine_threshold: f64,
    #[serde(default = "default_jaccard")]
    pub jaccard_threshold: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { cosine_threshold: default_cosine(), jaccard_threshold: default_jaccard() }
    }
}

/// Jaccard index of two sets; two empty sets score 0 so that blank
/// snippets are never merged on content alone.
pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn title_key(title: &str) -> String {
    title.trim().to_lowercase()
}

/// Sort by every field so that equal multisets of items get equal order.
pub fn canonical_order(items: &mut [EvidenceItem]) {
    items.sort_by(|a, b| {
        (&a.source_engine, &a.normalized_url, &a.title, &a.snippet, &a.url)
            .cmp(&(&b.source_engine, &b.normalized_url, &b.title, &b.snippet, &b.url))
    });
}

/// Greedy single pass: an item is kept unless it duplicates an already kept
/// item by normalized URL, casefolded title, or `same_content`.
fn dedup_with(
    items: Vec<EvidenceItem>,
    mut same_content: impl FnMut(usize, usize) -> bool,
) -> Vec<EvidenceItem> {
    let mut kept: Vec<usize> = Vec::new();
    let mut urls: HashMap<String, usize> = HashMap::new();
    let mut titles: HashMap<String, usize> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        if urls.contains_key(&item.normalized_url) {
            continue;
        }
        let title = title_key(&item.title);
        if !title.is_empty() && titles.contains_key(&title) {
            continue;
        }
        if kept.iter().any(|&k| same_content(k, i)) {
            continue;
        }
        urls.insert(item.normalized_url.clone(), i);
        if !title.is_empty() {
            titles.insert(title, i);
        }
        kept.push(i);
    }
    let keep: HashSet<usize> = kept.into_iter().collect();
    items.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, item)| item).collect()
}

/// Duplicate detection using character 3-gram Jaccard for content.
pub fn deduplicate_lexical(items: Vec<EvidenceItem>, config: &DedupConfig) -> Vec<EvidenceItem> {
    let grams: Vec<HashSet<String>> =
        items.iter().map(|i| char_trigrams(&i.snippet).into_iter().collect()).collect();
    dedup_with(items, |a, b| jaccard(&grams[a], &grams[b]) >= config.jaccard_threshold)
}

/// Remove duplicate evidence, keeping the first of each group. Content
/// similarity uses embeddings unless the embedder is the local stub or
/// fails, in which case 3-gram Jaccard is used.
pub async fn deduplicate(
    items: Vec<EvidenceItem>,
    embedder: &dyn Embedder,
    config: &DedupConfig,
) -> Vec<EvidenceItem> {
    if embedder.is_local_stub() || items.len() < 2 {
        return deduplicate_lexical(items, config);
    }
    let snippets: Vec<String> = items.iter().map(|i| i.snippet.clone()).collect();
    match embedder.embed(&snippets).await {
        Ok(vectors) if vectors.len() == items.len() => {
            dedup_with(items, |a, b| cosine(&vectors[a], &vectors[b]) >= config.cosine_threshold)
        }
        Ok(_) => deduplicate_lexical(items, config),
        Err(e) => {
            tracing::warn!(error = %e, "embedder failed during dedup; using n-gram jaccard");
            deduplicate_lexical(items, config)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::embed::LocalStubEmbedder;

    fn item(url: &str, title: &str, snippet: &str) -> EvidenceItem {
        EvidenceItem::from_hit(url, title, snippet, "web-a").unwrap()
    }

    #[tokio::test]
    async fn url_duplicates() {
        let out = deduplicate(
            vec![item("https://www.a.com/x", "one", "alpha beta"), item("http://a.com/x", "two", "gamma delta")],
            &LocalStubEmbedder::default(),
            &DedupConfig::default(),
        )
        .await;
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].title, "one");
    }

    #[test]
    fn title_duplicates() {
        let out = deduplicate_lexical(
            vec![item("https://a.com/1", "Fact check: X", "p"), item("https://b.com/2", "fact check: x ", "q")],
            &DedupConfig::default(),
        );
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn disjoint_snippets_jaccard_oracle() {
        let a = "a".repeat(40);
        let b = "b".repeat(40);
        // brute force: the only 3-gram of a is "aaa", of b is "bbb"
        let ga: HashSet<String> = (0..a.len() - 2).map(|i| a[i..i + 3].to_string()).collect();
        let gb: HashSet<String> = (0..b.len() - 2).map(|i| b[i..i + 3].to_string()).collect();
        assert_eq!(ga.intersection(&gb).count(), 0);
        let out = deduplicate_lexical(
            vec![item("https://a.com/1", "A", &a), item("https://b.com/2", "B", &b)],
            &DedupConfig::default(),
        );
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn near_identical_snippets_merge() {
        let s1 = "The Eiffel Tower was completed in March 1889 for the World's Fair in Paris.";
        let s2 = "The Eiffel Tower was completed in March 1889 for the World's Fair in Paris!";
        let out = deduplicate_lexical(
            vec![item("https://a.com/1", "A", s1), item("https://b.com/2", "B", s2)],
            &DedupConfig::default(),
        );
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn jaccard_empty_sets() {
        let e: HashSet<String> = HashSet::new();
        assert_eq!(jaccard(&e, &e), 0.0);
    }
}
