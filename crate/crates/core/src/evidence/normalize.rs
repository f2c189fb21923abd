use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UrlError {
    #[error("malformed url {0:?}")]
    MalformedUrl(String),
}

fn is_tracking_param(key: &str) -> bool {
    let k = key.to_ascii_lowercase();
    k.starts_with("utm_") || k == "fbclid" || k == "gclid"
}

fn parse_lenient(raw: &str) -> Result<Url, UrlError> {
    let malformed = || UrlError::MalformedUrl(raw.to_string());
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
        return Err(malformed());
    }
    match Url::parse(trimmed) {
        Ok(u) => Ok(u),
        // bare "example.com/path" from search snippets
        Err(url::ParseError::RelativeUrlWithoutBase) if trimmed.contains('.') => {
            Url::parse(&format!("http://{trimmed}")).map_err(|_| malformed())
        }
        Err(_) => Err(malformed()),
    }
}

/// Canonical comparison key for a URL: scheme, `www.`, fragment, trailing
/// slashes and tracking parameters removed; host lowercased; remaining
/// query parameters sorted.
pub fn normalize_url(raw: &str) -> Result<String, UrlError> {
    let url = parse_lenient(raw)?;
    let host = url
        .host_str()
        .filter(|h| !h.is_empty())
        .ok_or_else(|| UrlError::MalformedUrl(raw.to_string()))?
        .to_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);
    let host = host.trim_end_matches('.');

    let mut out = String::from(host);
    if let Some(port) = url.port() {
        out.push(':');
        out.push_str(&port.to_string());
    }
    out.push_str(url.path().trim_end_matches('/'));

    if let Some(query) = url.query() {
        let mut params: Vec<&str> = query
            .split('&')
            .filter(|p| !p.is_empty())
            .filter(|p| !is_tracking_param(p.split('=').next().unwrap_or(p)))
            .collect();
        params.sort_unstable();
        if !params.is_empty() {
            out.push('?');
            out.push_str(&params.join("&"));
        }
    }
    Ok(out)
}

/// Host portion of a normalized URL (no port).
pub fn host_of_normalized(normalized: &str) -> &str {
    let end = normalized.find(['/', '?', ':']).unwrap_or(normalized.len());
    &normalized[..end]
}
