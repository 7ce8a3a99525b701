//! Policy discovery, archived snapshot retrieval, text extraction and the
//! on-disk snapshot store.

mod archive;
mod discover;
mod extract;
mod fetch;
mod links;
mod robots;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::yearmonth::YearMonth;

pub use archive::{ArchiveClient, ArchiveConfig, Capture};
pub use discover::{choose_policy_link, discover_policies, parse_url_list, DiscoveredPolicy, Discovery, POLICIES_FILE};
pub use extract::{extract_text, terms_heading_precedes_privacy, ExtractError, DEFAULT_MIN_CHARS};
pub use fetch::{extract_store, fetch_policies, ExtractReport, FetchReport, HostThrottle, LiveFetcher, PoolConfig};
pub use links::{find_candidate_links, registrable_domain, CandidateLink, LinkScan, MatchReason, POLICY_KEYWORDS};
pub use robots::Robots;
pub use store::{sha256_hex, Manifest, ManifestEntry, SnapshotStore, StoreError, WriteOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "lowercase")]
pub enum SnapshotStatus {
    Raw,
    Extracted,
    Rejected(String),
}

impl fmt::Display for SnapshotStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnapshotStatus::Raw => f.write_str("raw"),
            SnapshotStatus::Extracted => f.write_str("extracted"),
            SnapshotStatus::Rejected(r) => write!(f, "rejected({r})"),
        }
    }
}

/// One archived capture of a policy, at monthly resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySnapshot {
    pub policy_id: String,
    pub month: YearMonth,
    pub archive_url: String,
    pub raw_html: Vec<u8>,
    /// Empty until extraction succeeds.
    pub extracted_text: String,
    pub status: SnapshotStatus,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("archive unreachable after {attempts} attempt(s): {reason}")]
    ArchiveUnreachable { attempts: u32, reason: String },
    #[error("disallowed by robots policy: {0}")]
    RobotsDisallowed(String),
    #[error("empty month range {from}..{to}")]
    InvalidRange { from: YearMonth, to: YearMonth },
    #[error("fetch failed for {url}: {reason}")]
    Fetch { url: String, reason: String },
    #[error("malformed archive index: {0}")]
    MalformedIndex(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Filesystem-safe identifier for a policy URL: host and path, lowercased,
/// with every other character run collapsed to a hyphen.
pub fn policy_id_for_url(url: &url::Url) -> String {
    let host = url.host_str().unwrap_or("");
    let host = host.strip_prefix("www.").unwrap_or(host);
    let raw = format!("{host}{}", url.path());
    let mut id = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_ascii_alphanumeric() || c == '.' {
            id.push(c.to_ascii_lowercase());
        } else if !id.ends_with('-') {
            id.push('-');
        }
    }
    id.trim_matches(|c| c == '-' || c == '.').to_string()
}
