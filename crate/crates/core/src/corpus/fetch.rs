use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use url::Url;

use super::archive::ArchiveClient;
use super::extract::{extract_text, terms_heading_precedes_privacy};
use super::robots::Robots;
use super::store::{SnapshotStore, StoreError, WriteOutcome};
use super::{CorpusError, SnapshotStatus};
use crate::http::{HttpClient, HttpError};
use crate::yearmonth::YearMonth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    pub workers: usize,
    /// Minimum spacing between requests to one host.
    #[serde(with = "millis")]
    pub politeness: Duration,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig { workers: 8, politeness: Duration::from_secs(1) }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Spaces out requests to the same host across threads.
#[derive(Debug, Default)]
pub struct HostThrottle {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl HostThrottle {
    pub fn new(delay: Duration) -> Self {
        HostThrottle { delay, next_slot: Mutex::new(HashMap::new()) }
    }

    /// Blocks until a request to `url`'s host may be sent.
    pub fn wait(&self, url: &str) {
        let host = Url::parse(url).ok().and_then(|u| u.host_str().map(str::to_string)).unwrap_or_default();
        let slot = {
            let mut slots = self.next_slot.lock().unwrap();
            let now = Instant::now();
            let slot = slots.get(&host).copied().filter(|&s| s > now).unwrap_or(now);
            slots.insert(host, slot + self.delay);
            slot
        };
        let now = Instant::now();
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

/// Fetches live pages, honoring robots.txt.
#[derive(Debug)]
pub struct LiveFetcher {
    client: HttpClient,
    throttle: Arc<HostThrottle>,
    agent: String,
    robots: Mutex<HashMap<String, Arc<Robots>>>,
}

impl LiveFetcher {
    pub fn new(client: HttpClient, throttle: Arc<HostThrottle>, agent: impl Into<String>) -> Self {
        LiveFetcher { client, throttle, agent: agent.into(), robots: Mutex::new(HashMap::new()) }
    }

    fn robots_for(&self, url: &Url) -> Result<Arc<Robots>, CorpusError> {
        let origin = url.origin().ascii_serialization();
        if let Some(r) = self.robots.lock().unwrap().get(&origin) {
            return Ok(Arc::clone(r));
        }
        let robots_url = format!("{origin}/robots.txt");
        self.throttle.wait(&robots_url);
        let robots = match self.client.get(&robots_url) {
            Ok(body) => Robots::parse(&String::from_utf8_lossy(&body)),
            // A missing or forbidden robots.txt places no restriction.
            Err(e) if matches!(e.last, HttpError::Status(400..=499)) => Robots::allow_all(),
            Err(e) => {
                return Err(CorpusError::RobotsDisallowed(format!("{robots_url} unavailable: {}", e.last)));
            }
        };
        let robots = Arc::new(robots);
        self.robots.lock().unwrap().insert(origin, Arc::clone(&robots));
        Ok(robots)
    }

    pub fn fetch(&self, url: &Url) -> Result<Vec<u8>, CorpusError> {
        let robots = self.robots_for(url)?;
        if !robots.is_allowed(&self.agent, url.path()) {
            return Err(CorpusError::RobotsDisallowed(url.to_string()));
        }
        self.throttle.wait(url.as_str());
        self.client
            .get(url.as_str())
            .map_err(|e| CorpusError::Fetch { url: url.to_string(), reason: e.last.to_string() })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FetchReport {
    pub written: usize,
    pub unchanged: usize,
    pub failures: Vec<(String, String)>,
}

/// Fetches every `(policy_id, url)` over `[from, to]` into the store.
///
/// Policies are processed by a bounded pool; store writes are serialized.
pub fn fetch_policies(
    store: &SnapshotStore,
    archive: &ArchiveClient,
    policies: &[(String, String)],
    from: YearMonth,
    to: YearMonth,
    pool: &PoolConfig,
) -> Result<FetchReport, CorpusError> {
    if from > to {
        return Err(CorpusError::InvalidRange { from, to });
    }
    let workers = rayon::ThreadPoolBuilder::new().num_threads(pool.workers.max(1)).build().expect("thread pool");
    let throttle = HostThrottle::new(pool.politeness);
    let writer = Mutex::new(FetchReport::default());
    let outcome: Result<(), StoreError> = workers.install(|| {
        policies.par_iter().try_for_each(|(policy_id, url)| {
            let snapshots = archive.fetch_archive_snapshots_throttled(policy_id, url, from, to, &throttle);
            let mut report = writer.lock().unwrap();
            match snapshots {
                Ok(snapshots) => {
                    for s in &snapshots {
                        match store.put_raw(s, url)? {
                            WriteOutcome::Written => report.written += 1,
                            WriteOutcome::Unchanged => report.unchanged += 1,
                        }
                    }
                }
                Err(e) => report.failures.push((policy_id.clone(), e.to_string())),
            }
            Ok(())
        })
    });
    outcome?;
    let mut report = writer.into_inner().unwrap();
    report.failures.sort();
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractReport {
    pub extracted: usize,
    pub rejected: usize,
}

/// Extracts text for every raw snapshot in the store.
pub fn extract_store(store: &SnapshotStore, min_chars: usize) -> Result<ExtractReport, StoreError> {
    let reports: Vec<ExtractReport> = store
        .policies()?
        .par_iter()
        .map(|policy_id| {
            let mut manifest = store.manifest(policy_id)?;
            let mut report = ExtractReport::default();
            let raw: Vec<YearMonth> =
                manifest.entries.iter().filter(|(_, e)| e.status == SnapshotStatus::Raw).map(|(&m, _)| m).collect();
            for month in raw {
                let html = store.read_html(policy_id, month)?;
                match extract_text(&html, min_chars) {
                    Ok(text) => {
                        let embedded = terms_heading_precedes_privacy(&text);
                        store.put_text(&mut manifest, month, &text, embedded)?;
                        report.extracted += 1;
                    }
                    Err(e) => {
                        manifest.entries.get_mut(&month).expect("listed above").status =
                            SnapshotStatus::Rejected(e.reason().into());
                        report.rejected += 1;
                    }
                }
            }
            store.save_manifest(&manifest)?;
            Ok(report)
        })
        .collect::<Result<_, StoreError>>()?;
    Ok(reports.into_iter().fold(ExtractReport::default(), |acc, r| ExtractReport {
        extracted: acc.extracted + r.extracted,
        rejected: acc.rejected + r.rejected,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArchiveConfig;
    use crate::http::testserver::serve;
    use crate::http::HttpConfig;

    fn quick() -> HttpConfig {
        HttpConfig { timeout: Duration::from_secs(5), retries: 0, backoff: Duration::from_millis(1) }
    }

    #[test]
    fn throttle_spaces_same_host() {
        let t = HostThrottle::new(Duration::from_millis(40));
        let start = Instant::now();
        for _ in 0..3 {
            t.wait("http://a.test/x");
        }
        assert!(start.elapsed() >= Duration::from_millis(80));
        let start = Instant::now();
        t.wait("http://b.test/x");
        assert!(start.elapsed() < Duration::from_millis(40));
    }

    #[test]
    fn live_fetch_honors_robots() {
        let server = serve(Box::new(|req| match req.path.as_str() {
            "/robots.txt" => (200, b"User-agent: *\nDisallow: /private\n".to_vec()),
            "/" => (200, b"<a href='/privacy'>Privacy</a>".to_vec()),
            _ => (404, Vec::new()),
        }));
        let fetcher =
            LiveFetcher::new(HttpClient::new(quick()), Arc::new(HostThrottle::new(Duration::ZERO)), "polidiff");
        let base = Url::parse(&server.base).unwrap();
        assert!(fetcher.fetch(&base).is_ok());
        assert!(matches!(fetcher.fetch(&base.join("/private/x").unwrap()), Err(CorpusError::RobotsDisallowed(_))));
        // robots.txt is fetched once per origin.
        let log = server.log.lock().unwrap();
        assert_eq!(log.iter().filter(|l| l.ends_with("/robots.txt")).count(), 1);
    }

    #[test]
    fn missing_robots_allows_everything() {
        let server =
            serve(Box::new(|req| if req.path == "/robots.txt" { (404, Vec::new()) } else { (200, b"ok".to_vec()) }));
        let fetcher =
            LiveFetcher::new(HttpClient::new(quick()), Arc::new(HostThrottle::new(Duration::ZERO)), "polidiff");
        assert_eq!(fetcher.fetch(&Url::parse(&server.base).unwrap().join("/x").unwrap()).unwrap(), b"ok");
    }

    fn page(paragraphs: usize) -> String {
        let body: String = (0..paragraphs)
            .map(|i| format!("<p>Paragraph {i} explains how we collect and use your personal information.</p>"))
            .collect();
        format!("<html><body><nav>Menu</nav>{body}</body></html>")
    }

    #[test]
    fn fetch_then_extract_is_idempotent() {
        let server = serve(Box::new(|req| {
            if req.path.starts_with("/cdx") {
                let rows = r#"[["timestamp","original"],["20180110000000","http://e.com/p"],["20180210000000","http://e.com/p"]]"#;
                (200, rows.as_bytes().to_vec())
            } else if req.path.contains("201802") {
                (200, page(1).into_bytes())
            } else {
                (200, page(10).into_bytes())
            }
        }));
        let archive = ArchiveClient::new(
            ArchiveConfig { cdx_url: format!("{}/cdx", server.base), snapshot_base: server.base.clone() },
            quick(),
        );
        let dir = tempfile::tempdir().unwrap();
        let store = SnapshotStore::open(dir.path()).unwrap();
        let policies = vec![("e.com-p".to_string(), "http://e.com/p".to_string())];
        let pool = PoolConfig { workers: 2, politeness: Duration::ZERO };
        let range = ("2018-01".parse().unwrap(), "2018-12".parse().unwrap());
        let first = fetch_policies(&store, &archive, &policies, range.0, range.1, &pool).unwrap();
        assert_eq!((first.written, first.unchanged), (2, 0));
        let second = fetch_policies(&store, &archive, &policies, range.0, range.1, &pool).unwrap();
        assert_eq!((second.written, second.unchanged), (0, 2));

        let report = extract_store(&store, 500).unwrap();
        assert_eq!(report, ExtractReport { extracted: 1, rejected: 1 });
        let manifest = store.manifest("e.com-p").unwrap();
        let statuses: Vec<_> = manifest.entries.values().map(|e| e.status.to_string()).collect();
        assert_eq!(statuses, ["extracted", "rejected(too-short)"]);
        assert_eq!(extract_store(&store, 500).unwrap(), ExtractReport::default());
    }
}
