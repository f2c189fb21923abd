//! Small tokenization helpers shared by the stub providers.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "the", "and", "for", "are", "was", "were", "with", "that", "this", "from", "has", "have",
    "had", "its", "his", "her", "their", "who", "what", "when", "where", "which", "why", "how",
    "into", "than", "then", "there", "these", "those", "been", "being", "also", "about", "over",
    "under", "after", "before", "does", "did", "not", "but", "all", "any", "can", "will", "would",
    "should", "could", "our", "your", "they", "them", "you", "she", "him", "one", "per", "via",
];

/// Lowercased runs of alphanumeric characters (decimal points kept inside numbers).
pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let numeric_dot = (c == '.' || c == ',')
            && cur.chars().last().is_some_and(|p| p.is_ascii_digit())
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if c.is_alphanumeric() || numeric_dot {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn is_content_word(token: &str) -> bool {
    token.chars().any(|c| c.is_numeric())
        || (token.chars().count() >= 3 && !STOPWORDS.contains(&token))
}

/// Distinct content words of `text`.
pub fn content_words(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().filter(|t| is_content_word(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_numbers_and_unicode() {
        assert_eq!(tokens("GDP grew 5.5% in 2023, not 1,000!"), ["gdp", "grew", "5.5", "in", "2023", "not", "1,000"]);
        assert_eq!(tokens("Ørsted’s wind"), ["ørsted", "s", "wind"]);
    }

    #[test]
    fn content_word_filter() {
        let w = content_words("The tower was built in 1889");
        assert_eq!(w.into_iter().collect::<Vec<_>>(), ["1889", "built", "tower"]);
    }
}
