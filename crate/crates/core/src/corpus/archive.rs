use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::fetch::HostThrottle;
use super::{CorpusError, PolicySnapshot, SnapshotStatus};
use crate::http::{Exhausted, HttpClient, HttpConfig, HttpError};
use crate::yearmonth::YearMonth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchiveConfig {
    /// CDX-style index endpoint.
    pub cdx_url: String,
    /// Prefix for raw capture URLs: `{snapshot_base}/web/{timestamp}id_/{url}`.
    pub snapshot_base: String,
}

impl Default for ArchiveConfig {
    fn default() -> Self {
        ArchiveConfig {
            cdx_url: "https://web.archive.org/cdx/search/cdx".into(),
            snapshot_base: "https://web.archive.org".into(),
        }
    }
}

/// One capture listed by the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    /// 14-digit `YYYYMMDDhhmmss` timestamp.
    pub timestamp: String,
    pub original: String,
    pub month: YearMonth,
}

#[derive(Debug, Clone)]
pub struct ArchiveClient {
    config: ArchiveConfig,
    client: HttpClient,
}

fn unreachable(e: Exhausted) -> CorpusError {
    CorpusError::ArchiveUnreachable { attempts: e.attempts, reason: e.last.to_string() }
}

fn encode(s: &str) -> String {
    url::form_urlencoded::byte_serialize(s.as_bytes()).collect()
}

impl ArchiveClient {
    pub fn new(config: ArchiveConfig, http: HttpConfig) -> Self {
        ArchiveClient { config, client: HttpClient::new(http) }
    }

    /// All successful captures of `url` in `[from, to]`.
    pub fn captures(&self, url: &str, from: YearMonth, to: YearMonth) -> Result<Vec<Capture>, CorpusError> {
        self.captures_throttled(url, from, to, &HostThrottle::default())
    }

    fn captures_throttled(
        &self,
        url: &str,
        from: YearMonth,
        to: YearMonth,
        throttle: &HostThrottle,
    ) -> Result<Vec<Capture>, CorpusError> {
        let query = format!(
            "{}?url={}&from={}&to={}&output=json&fl=timestamp,original,statuscode&filter=statuscode:200",
            self.config.cdx_url,
            encode(url),
            from.compact(),
            to.compact()
        );
        throttle.wait(&query);
        let body = self.client.get(&query).map_err(|e| match e.last {
            HttpError::Status(403) => CorpusError::RobotsDisallowed(url.to_string()),
            _ => unreachable(e),
        })?;
        if body.iter().all(u8::is_ascii_whitespace) {
            return Ok(Vec::new());
        }
        let rows: Vec<Vec<String>> =
            serde_json::from_slice(&body).map_err(|e| CorpusError::MalformedIndex(e.to_string()))?;
        let mut captures = Vec::new();
        // The first row names the fields.
        for row in rows.into_iter().skip(1) {
            let [timestamp, original, ..] = row.as_slice() else {
                return Err(CorpusError::MalformedIndex(format!("short row {row:?}")));
            };
            let month = YearMonth::from_archive_timestamp(timestamp)
                .ok_or_else(|| CorpusError::MalformedIndex(format!("bad timestamp {timestamp:?}")))?;
            if (from..=to).contains(&month) {
                captures.push(Capture { timestamp: timestamp.clone(), original: original.clone(), month });
            }
        }
        Ok(captures)
    }

    pub fn capture_url(&self, capture: &Capture) -> String {
        format!("{}/web/{}id_/{}", self.config.snapshot_base, capture.timestamp, capture.original)
    }

    /// One snapshot per month with captures: the earliest capture of the
    /// month. A capture the archive refuses to serve is kept as a rejected
    /// snapshot with no content.
    pub fn fetch_archive_snapshots(
        &self,
        policy_id: &str,
        url: &str,
        from: YearMonth,
        to: YearMonth,
    ) -> Result<Vec<PolicySnapshot>, CorpusError> {
        self.fetch_archive_snapshots_throttled(policy_id, url, from, to, &HostThrottle::default())
    }

    pub(crate) fn fetch_archive_snapshots_throttled(
        &self,
        policy_id: &str,
        url: &str,
        from: YearMonth,
        to: YearMonth,
        throttle: &HostThrottle,
    ) -> Result<Vec<PolicySnapshot>, CorpusError> {
        if from > to {
            return Err(CorpusError::InvalidRange { from, to });
        }
        let mut earliest: BTreeMap<YearMonth, Capture> = BTreeMap::new();
        for c in self.captures_throttled(url, from, to, throttle)? {
            match earliest.get(&c.month) {
                Some(e) if e.timestamp <= c.timestamp => {}
                _ => {
                    earliest.insert(c.month, c);
                }
            }
        }
        let mut snapshots = Vec::with_capacity(earliest.len());
        for capture in earliest.values() {
            let archive_url = self.capture_url(capture);
            throttle.wait(&archive_url);
            let (raw_html, status) = match self.client.get(&archive_url) {
                Ok(body) => (body, SnapshotStatus::Raw),
                Err(Exhausted { last: HttpError::Status(403), .. }) => {
                    log::warn!("{archive_url}: refused by robots policy");
                    (Vec::new(), SnapshotStatus::Rejected("robots".into()))
                }
                Err(e) => return Err(unreachable(e)),
            };
            snapshots.push(PolicySnapshot {
                policy_id: policy_id.to_string(),
                month: capture.month,
                archive_url,
                raw_html,
                extracted_text: String::new(),
                status,
            });
        }
        Ok(snapshots)
    }
}
