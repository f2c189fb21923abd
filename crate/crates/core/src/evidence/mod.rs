//! Evidence retrieval: search fan-out, URL canonicalization,
//! deduplication, blocklist filtering and paragraph selection.

mod blocklist;
mod dedup;
mod embed;
mod search;
mod select;
mod normalize;

pub use self::blocklist::{filter_blocklist, Blocklist, BlocklistError};
pub use self::dedup::{canonical_order, deduplicate, deduplicate_lexical, jaccard, DedupConfig};
pub use self::embed::{
    char_trigrams, cosine, Embedder, EmbeddingProvider, HttpEmbedder, LocalStubEmbedder, LOCAL_STUB,
    STUB_DIMENSION,
};
pub use self::search::{
    search_all, Connector, CorpusDoc, HttpSearch, SearchBackend, SearchConnector, SearchError, SearchHit,
    StubSearch, DEFAULT_MAX_RESULTS, DEFAULT_SEARCH_CONCURRENCY,
};
pub use self::select::{select_top_snippets, split_paragraphs, SelectError, SelectionConfig};
pub use self::normalize::{host_of_normalized, normalize_url, UrlError};
