use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use url::Url;

use super::links::{find_candidate_links, CandidateLink, MatchReason};
use super::store::{SnapshotStore, StoreError};
use super::{policy_id_for_url, CorpusError};

/// Store-relative file listing the discovered policy URLs.
pub const POLICIES_FILE: &str = "policies.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveredPolicy {
    pub policy_id: String,
    pub source_url: Url,
    pub policy_url: Url,
    pub match_reason: MatchReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discovery {
    pub policies: Vec<DiscoveredPolicy>,
    /// Home pages that yielded no policy, with the reason.
    pub failures: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Discovery {
    /// `(policy_id, url)` pairs in the shape the fetch stage takes.
    pub fn targets(&self) -> Vec<(String, String)> {
        self.policies.iter().map(|p| (p.policy_id.clone(), p.policy_url.to_string())).collect()
    }

    pub fn save(&self, store: &SnapshotStore) -> Result<(), StoreError> {
        let mut json = serde_json::to_vec_pretty(self).expect("discovery serializes");
        json.push(b'\n');
        store.write_file(POLICIES_FILE, &json).map(|_| ())
    }

    pub fn load(store: &SnapshotStore) -> Result<Self, StoreError> {
        let bytes = store.read_file(POLICIES_FILE)?;
        serde_json::from_slice(&bytes)
            .map_err(|source| StoreError::Manifest { path: store.root().join(POLICIES_FILE), source })
    }
}

/// Parses a URL list: one per line, `#` comments and blank lines ignored.
/// Bare host names get an `https://` scheme.
pub fn parse_url_list(text: &str) -> Result<Vec<Url>, String> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, l)| {
            let raw = if l.contains("://") { l.to_string() } else { format!("https://{l}/") };
            Url::parse(&raw).map_err(|e| format!("line {n}: {l:?}: {e}"))
        })
        .collect()
}

/// The candidate most likely to be the privacy policy: the first one whose
/// URL names privacy, else the first candidate.
pub fn choose_policy_link(candidates: &[CandidateLink]) -> Option<&CandidateLink> {
    candidates
        .iter()
        .find(|c| c.candidate_url.as_str().to_lowercase().contains("privacy"))
        .or_else(|| candidates.first())
}

/// Fetches each home page and picks its policy link. Results keep input
/// order; a site whose policy URL was already found is reported once.
pub fn discover_policies<F>(home_pages: &[Url], allowed_domains: &[String], fetch: F) -> Discovery
where
    F: Fn(&Url) -> Result<Vec<u8>, CorpusError> + Sync,
{
    let warnings = Mutex::new(Vec::new());
    let outcomes: Vec<Result<DiscoveredPolicy, String>> = home_pages
        .par_iter()
        .map(|home| {
            let html = fetch(home).map_err(|e| e.to_string())?;
            let scan = find_candidate_links(&html, home, allowed_domains);
            warnings.lock().unwrap().extend(scan.warnings.iter().map(|w| format!("{home}: {w}")));
            let link = choose_policy_link(&scan.candidates).ok_or("no policy link found")?;
            Ok(DiscoveredPolicy {
                policy_id: policy_id_for_url(&link.candidate_url),
                source_url: home.clone(),
                policy_url: link.candidate_url.clone(),
                match_reason: link.match_reason,
            })
        })
        .collect();

    let mut discovery = Discovery { warnings: warnings.into_inner().unwrap(), ..Discovery::default() };
    discovery.warnings.sort();
    for (home, outcome) in home_pages.iter().zip(outcomes) {
        match outcome {
            Ok(p) if discovery.policies.iter().any(|q| q.policy_id == p.policy_id) => {
                discovery.warnings.push(format!("{home}: duplicate policy {}", p.policy_id));
            }
            Ok(p) => discovery.policies.push(p),
            Err(reason) => discovery.failures.push((home.to_string(), reason)),
        }
    }
    discovery
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_list_parsing() {
        let urls = parse_url_list("# sites\nexample.com\n\n https://shop.example.org/home  # main\n").unwrap();
        assert_eq!(
            urls.iter().map(Url::as_str).collect::<Vec<_>>(),
            ["https://example.com/", "https://shop.example.org/home"]
        );
        assert!(parse_url_list("http://[bad\n").unwrap_err().starts_with("line 1"));
    }

    #[test]
    fn discovery_picks_privacy_link_and_records_failures() {
        let pages = parse_url_list("a.example\nb.example\nc.example\nwww.a.example").unwrap();
        let fetch = |u: &Url| -> Result<Vec<u8>, CorpusError> {
            match u.host_str().unwrap() {
                "a.example" | "www.a.example" => {
                    Ok(br#"<a href="/terms">Notice</a><a href="/privacy">Privacy</a>"#.to_vec())
                }
                "b.example" => Ok(b"<a href='/about'>About</a>".to_vec()),
                _ => Err(CorpusError::Fetch { url: u.to_string(), reason: "HTTP 500".into() }),
            }
        };
        let d = discover_policies(&pages, &[], fetch);
        assert_eq!(d.policies.len(), 1);
        assert_eq!(d.policies[0].policy_url.as_str(), "https://a.example/privacy");
        assert_eq!(d.policies[0].policy_id, "a.example-privacy");
        assert_eq!(d.failures.len(), 2);
        assert_eq!(d.failures[0], ("https://b.example/".to_string(), "no policy link found".to_string()));
        assert!(d.warnings.iter().any(|w| w.contains("duplicate")));
        assert_eq!(d.targets(), [("a.example-privacy".to_string(), "https://a.example/privacy".to_string())]);
    }

    #[test]
    fn falls_back_to_first_candidate() {
        let base = Url::parse("https://x.example/").unwrap();
        let scan =
            find_candidate_links(br#"<a href="/legal/notice">Legal</a><a href="/policy">Policy</a>"#, &base, &[]);
        assert_eq!(choose_policy_link(&scan.candidates).unwrap().candidate_url.path(), "/legal/notice");
        assert!(choose_policy_link(&[]).is_none());
    }

    #[test]
    fn saves_and_loads() {
        let dir = tempfile::tempdir().unwrap();
        let store = SnapshotStore::open(dir.path()).unwrap();
        let d = Discovery { failures: vec![("https://z.example/".into(), "x".into())], ..Discovery::default() };
        d.save(&store).unwrap();
        assert_eq!(Discovery::load(&store).unwrap(), d);
    }
}
