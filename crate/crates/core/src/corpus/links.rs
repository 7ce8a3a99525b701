use std::collections::HashSet;

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use url::Url;

/// Words whose presence in a link's target or text marks a policy candidate.
pub const POLICY_KEYWORDS: [&str; 4] = ["privacy", "statement", "notice", "policy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchReason {
    Url,
    Title,
    UrlAndTitle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLink {
    pub source_url: Url,
    pub candidate_url: Url,
    pub match_reason: MatchReason,
}

/// Candidates in document order plus anything worth telling the operator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkScan {
    pub candidates: Vec<CandidateLink>,
    pub warnings: Vec<String>,
}

fn mentions_keyword(s: &str) -> bool {
    let s = s.to_lowercase();
    POLICY_KEYWORDS.iter().any(|k| s.contains(k))
}

/// Scans a home page for links that look like privacy policies.
///
/// Links leaving the page's registrable domain are kept only when their
/// domain appears in `allowed_domains`.
pub fn find_candidate_links(home_page_html: &[u8], base_url: &Url, allowed_domains: &[String]) -> LinkScan {
    let mut scan = LinkScan::default();
    let text = match std::str::from_utf8(home_page_html) {
        Ok(t) => std::borrow::Cow::Borrowed(t),
        Err(e) => {
            scan.warnings.push(format!("{base_url}: input is not valid UTF-8 ({e}); decoded lossily"));
            String::from_utf8_lossy(home_page_html)
        }
    };
    if !text.contains('<') {
        scan.warnings.push(format!("{base_url}: input contains no markup"));
        return scan;
    }
    let doc = Html::parse_document(&text);
    let anchors = Selector::parse("a[href]").expect("static selector");
    let home = registrable_domain(base_url);
    let mut seen = HashSet::new();
    for a in doc.select(&anchors) {
        let href = a.value().attr("href").unwrap_or("").trim();
        let title: String = a.text().collect::<Vec<_>>().join(" ");
        let in_url = mentions_keyword(href);
        let in_title = mentions_keyword(&title) || a.value().attr("title").is_some_and(mentions_keyword);
        let match_reason = match (in_url, in_title) {
            (true, true) => MatchReason::UrlAndTitle,
            (true, false) => MatchReason::Url,
            (false, true) => MatchReason::Title,
            (false, false) => continue,
        };
        let mut resolved = match base_url.join(href) {
            Ok(u) if matches!(u.scheme(), "http" | "https") => u,
            Ok(u) => {
                scan.warnings.push(format!("skipping non-web link {u}"));
                continue;
            }
            Err(e) => {
                scan.warnings.push(format!("cannot resolve {href:?}: {e}"));
                continue;
            }
        };
        resolved.set_fragment(None);
        let domain = registrable_domain(&resolved);
        if domain != home && !allowed_domains.iter().any(|d| d.eq_ignore_ascii_case(&domain)) {
            scan.warnings.push(format!("skipping cross-domain link {resolved}"));
            continue;
        }
        if seen.insert(resolved.clone()) {
            scan.candidates.push(CandidateLink { source_url: base_url.clone(), candidate_url: resolved, match_reason });
        }
    }
    scan
}

/// Country-code second levels that behave like public suffixes.
const SECOND_LEVELS: [&str; 8] = ["co", "com", "net", "org", "gov", "ac", "edu", "ne"];

/// Approximate registrable domain: the last two host labels, or three under
/// a two-letter country code with a generic second level (`example.co.uk`).
pub fn registrable_domain(url: &Url) -> String {
    let host = url.host_str().unwrap_or("").to_ascii_lowercase();
    if !matches!(url.host(), Some(url::Host::Domain(_))) {
        return host;
    }
    let labels: Vec<&str> = host.trim_end_matches('.').split('.').collect();
    let n = labels.len();
    let keep = if n >= 3 && labels[n - 1].len() == 2 && SECOND_LEVELS.contains(&labels[n - 2]) { 3 } else { 2 };
    labels[n.saturating_sub(keep)..].join(".")
}
