use std::collections::BTreeSet;
use std::path::Path;

use crate::model::EvidenceItem;

#[derive(Debug, thiserror::Error)]
pub enum BlocklistError {
    #[error("line {line}: {entry:?} is not a bare domain")]
    InvalidEntry { line: usize, entry: String },
    #[error("reading blocklist: {0}")]
    Io(#[from] std::io::Error),
}

/// Registrable domains whose pages are never used as evidence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blocklist {
    domains: BTreeSet<String>,
}

impl Blocklist {
    pub fn new<I, S>(domains: I) -> Result<Self, BlocklistError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Self::default();
        for (i, d) in domains.into_iter().enumerate() {
            list.insert(d.as_ref(), i + 1)?;
        }
        Ok(list)
    }

    fn insert(&mut self, raw: &str, line: usize) -> Result<(), BlocklistError> {
        let entry = raw.trim().to_lowercase();
        let valid = !entry.is_empty()
            && !entry.contains("://")
            && !entry.contains(['/', '?', '#', ' '])
            && entry.contains('.');
        if !valid {
            return Err(BlocklistError::InvalidEntry { line, entry: raw.to_string() });
        }
        self.domains.insert(entry);
        Ok(())
    }

    /// One domain per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, BlocklistError> {
        let mut list = Self::default();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                list.insert(content, i + 1)?;
            }
        }
        Ok(list)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BlocklistError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.domains.iter().map(String::as_str)
    }

    pub fn merge(&mut self, other: Blocklist) {
        self.domains.extend(other.domains);
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// True if `host` or any parent domain of it is listed.
    pub fn blocks_host(&self, host: &str) -> bool {
        let host = host.to_lowercase();
        let mut rest = host.as_str();
        loop {
            if self.domains.contains(rest) {
                return true;
            }
            match rest.split_once('.') {
                Some((_, parent)) if !parent.is_empty() => rest = parent,
                _ => return false,
            }
        }
    }

    pub fn fingerprint(&self) -> String {
        crate::provider::fingerprint(self.domains.iter())
    }
}

/// Drop items hosted on a blocked domain or any of its subdomains.
pub fn filter_blocklist(items: Vec<EvidenceItem>, blocklist: &Blocklist) -> Vec<EvidenceItem> {
    if blocklist.is_empty() {
        return items;
    }
    items.into_iter().filter(|item| !blocklist.blocks_host(item.host())).collect()
}
