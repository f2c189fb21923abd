use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::model::{LanguageTag, Verdict};
use crate::provider::fingerprint;

/// Verdicts keyed by (claim text, language, provider fingerprint), stored
/// serialized. Entries that fail to deserialize count as misses.
#[derive(Debug)]
pub struct VerdictCache {
    ttl: Duration,
    entries: Mutex<HashMap<String, (Instant, String)>>,
}

impl VerdictCache {
    /// A TTL of zero disables the cache.
    pub fn new(ttl: Duration) -> Self {
        Self { ttl, entries: Mutex::new(HashMap::new()) }
    }

    pub fn enabled(&self) -> bool {
        !self.ttl.is_zero()
    }

    pub fn key(claim_text: &str, language: &LanguageTag, provider_fingerprint: &str) -> String {
        fingerprint([claim_text, language.as_str(), provider_fingerprint])
    }

    pub fn lookup(&self, key: &str) -> Option<Verdict> {
        if !self.enabled() {
            return None;
        }
        let mut entries = self.entries.lock().expect("cache lock poisoned");
        let (stored_at, raw) = entries.get(key)?;
        if stored_at.elapsed() > self.ttl {
            entries.remove(key);
            return None;
        }
        match serde_json::from_str(raw) {
            Ok(v) => Some(v),
            Err(e) => {
                tracing::warn!(error = %e, "dropping corrupt cache entry");
                entries.remove(key);
                None
            }
        }
    }

    pub fn store(&self, key: String, verdict: &Verdict) {
        if let Ok(raw) = serde_json::to_string(verdict) {
            self.store_raw(key, raw);
        }
    }

    pub fn store_raw(&self, key: String, raw: String) {
        if !self.enabled() {
            return;
        }
        self.entries.lock().expect("cache lock poisoned").insert(key, (Instant::now(), raw));
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.entries.lock().expect("cache lock poisoned").clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Claim, Sentence};

    fn verdict() -> Verdict {
        let en = LanguageTag::parse("en").unwrap();
        crate::verdict::aggregate(&Claim::new(Sentence::standalone("c", en), 0.9, 0.5), vec![])
    }

    #[test]
    fn round_trip_and_ttl_zero() {
        let en = LanguageTag::parse("en").unwrap();
        let key = VerdictCache::key("c", &en, "fp");
        let cache = VerdictCache::new(Duration::from_secs(60));
        assert!(cache.lookup(&key).is_none());
        cache.store(key.clone(), &verdict());
        assert_eq!(cache.lookup(&key), Some(verdict()));

        let off = VerdictCache::new(Duration::ZERO);
        off.store(key.clone(), &verdict());
        assert!(off.lookup(&key).is_none());
        assert!(off.is_empty());
    }

    #[test]
    fn fingerprint_changes_key() {
        let en = LanguageTag::parse("en").unwrap();
        assert_ne!(VerdictCache::key("c", &en, "a"), VerdictCache::key("c", &en, "b"));
        let nb = LanguageTag::parse("nb").unwrap();
        assert_ne!(VerdictCache::key("c", &en, "a"), VerdictCache::key("c", &nb, "a"));
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let cache = VerdictCache::new(Duration::from_secs(60));
        cache.store_raw("k".into(), "{not json".into());
        assert!(cache.lookup("k").is_none());
        assert!(cache.is_empty());
    }

    #[test]
    fn expired_entry_is_a_miss() {
        let cache = VerdictCache::new(Duration::from_millis(1));
        cache.store("k".into(), &verdict());
        std::thread::sleep(Duration::from_millis(5));
        assert!(cache.lookup("k").is_none());
    }
}
