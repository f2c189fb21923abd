//! Inputs shared by the benchmarks.

use factcheck_core::{Claim, EvidenceItem, LanguageTag, Sentence, StanceLabel};

pub const DOCUMENT: &str = include_str!("../../core/fixtures/document.txt");

pub fn english() -> LanguageTag {
    LanguageTag::parse("en").expect("valid tag")
}

/// `n` evidence items where roughly a third repeat an earlier URL or snippet.
pub fn evidence(n: usize) -> Vec<EvidenceItem> {
    (0..n)
        .map(|i| {
            let base = if i % 3 == 2 { i - 1 } else { i };
            let url = format!("https://www.site{}.example/article/{base}?utm_source=bench", base % 17);
            let snippet = format!("Report {base}: the measured value was {} units in year {}.", base * 7, 1990 + base % 30);
            let mut item = EvidenceItem::from_hit(url, format!("Title {i}"), snippet, "web-a").expect("valid url");
            item.stance = Some(if i % 4 == 0 { StanceLabel::Refutes } else { StanceLabel::Supports });
            item.similarity = Some((i % 8) as f64 / 8.0);
            item
        })
        .collect()
}

pub fn claim() -> Claim {
    Claim::new(Sentence::standalone("The tower is 330 metres tall.", english()), 0.9, 0.5)
}
