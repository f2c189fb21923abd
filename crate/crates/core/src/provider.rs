//! Shared plumbing for network-backed model providers.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
}

impl ProviderError {
    pub fn unavailable(e: impl std::fmt::Display) -> Self {
        Self::Unavailable(e.to_string())
    }

    pub fn malformed(e: impl std::fmt::Display) -> Self {
        Self::MalformedResponse(e.to_string())
    }
}

/// Short hex digest identifying a provider configuration.
pub fn fingerprint<I, S>(parts: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut hasher = Sha256::new();
    for part in parts {
        let part = part.as_ref();
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Thin JSON-over-HTTP client shared by the remote providers.
#[derive(Debug, Clone)]
pub struct JsonEndpoint {
    client: reqwest::Client,
    url: String,
    bearer: Option<String>,
}

impl JsonEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let url = url.into();
        url::Url::parse(&url).map_err(|e| ProviderError::unavailable(format!("{url}: {e}")))?;
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(ProviderError::unavailable)?;
        Ok(Self { client, url, bearer: None })
    }

    pub fn with_bearer(mut self, token: Option<String>) -> Self {
        self.bearer = token;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub async fn post<Req, Resp>(&self, body: &Req) -> Result<Resp, ProviderError>
    where
        Req: Serialize + ?Sized,
        Resp: DeserializeOwned,
    {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(token) = &self.bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().await.map_err(ProviderError::unavailable)?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(ProviderError::Unavailable(format!("{} returned {status}", self.url)));
        }
        if !status.is_success() {
            return Err(ProviderError::MalformedResponse(format!("{} returned {status}", self.url)));
        }
        let bytes = resp.bytes().await.map_err(ProviderError::unavailable)?;
        serde_json::from_slice(&bytes).map_err(ProviderError::malformed)
    }

    /// Reachability probe: any HTTP response counts as reachable.
    pub async fn probe(&self) -> bool {
        self.client
            .get(&self.url)
            .timeout(Duration::from_secs(2))
            .send()
            .await
            .is_ok()
    }
}
