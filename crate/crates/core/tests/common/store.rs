//! Synthetic snapshot stores for pipeline tests. Policy ids match the
//! annotation fixtures (`site00.example` ...).

use std::path::Path;

use polidiff::corpus::{PolicySnapshot, SnapshotStatus, SnapshotStore};
use polidiff::YearMonth;

const CLAUSES: [&str; 12] = [
    "We collect the name and email address you give us when you create an account.",
    "Usage data such as pages visited is recorded by our servers.",
    "Cookies are used to remember your preferences between visits.",
    "We share aggregated statistics with analytics partners.",
    "You may ask us to delete your account at any time.",
    "Personal data is retained for as long as your account is active.",
    "Payment details are processed by a third-party provider.",
    "We use industry standard encryption to protect stored data.",
    "Children under thirteen may not use the service.",
    "Questions about this notice can be sent to our privacy team.",
    "Marketing emails are sent only with your consent.",
    "Changes to this policy are announced on this page.",
];

const ADDED: [&str; 6] = [
    "You have the right to access, correct, and export your personal data.",
    "Our lawful basis for processing is your consent or our legitimate interest.",
    "You may lodge a complaint with a supervisory authority.",
    "Data transferred outside the region is protected by standard contractual clauses.",
    "Our data protection officer can be reached at the address below.",
    "We notify you of breaches that affect your data without undue delay.",
];

fn ym(s: &str) -> YearMonth {
    s.parse().unwrap()
}

fn text(policy: usize, revised: bool) -> String {
    let mut paragraphs: Vec<String> = (0..8)
        .map(|k| {
            let a = CLAUSES[(policy + k) % CLAUSES.len()];
            let b = CLAUSES[(policy * 5 + k * 7 + 3) % CLAUSES.len()];
            format!("{a} {b}")
        })
        .collect();
    if revised {
        paragraphs.truncate(4);
        paragraphs.extend(ADDED.iter().map(|s| format!("{s} This applies to site {policy}.")));
    }
    paragraphs.join("\n\n")
}

/// Months with a snapshot, and whether each carries the revised text.
fn timeline(policy: usize) -> Vec<(YearMonth, bool)> {
    let months = ["2017-01", "2017-05", "2017-09", "2018-01", "2018-04", "2018-06", "2018-10", "2019-02"];
    // Every fourth policy never changes; the rest change at 2018-04 or 2018-06.
    let change = match policy % 4 {
        0 => None,
        1 => Some(ym("2018-04")),
        _ => Some(ym("2018-06")),
    };
    months.iter().map(|m| (ym(m), change.is_some_and(|c| ym(m) >= c))).collect()
}

pub fn policy_id(i: usize) -> String {
    format!("site{i:02}.example")
}

/// Writes `n` policies with extracted snapshots into a store at `root`.
pub fn build(root: &Path, n: usize) -> SnapshotStore {
    let store = SnapshotStore::open(root).unwrap();
    for i in 0..n {
        let id = policy_id(i);
        for (month, revised) in timeline(i) {
            let body = text(i, revised);
            let html = format!("<html><body><p>{}</p></body></html>", body.replace("\n\n", "</p><p>"));
            let snap = PolicySnapshot {
                policy_id: id.clone(),
                month,
                archive_url: format!("https://archive.example/web/{}id_/https://{id}/privacy", month.compact()),
                raw_html: html.into_bytes(),
                extracted_text: String::new(),
                status: SnapshotStatus::Raw,
            };
            store.put_raw(&snap, &format!("https://{id}/privacy")).unwrap();
            let mut manifest = store.manifest(&id).unwrap();
            store.put_text(&mut manifest, month, &body, false).unwrap();
            store.save_manifest(&manifest).unwrap();
        }
    }
    store
}

/// Expected key-change month per policy, `None` for unchanged ones.
pub fn expected_key_change(i: usize) -> Option<YearMonth> {
    match i % 4 {
        0 => None,
        1 => Some(ym("2018-04")),
        _ => Some(ym("2018-06")),
    }
}
