//! Month-over-month change detection and before/after pair selection.

mod levenshtein;
mod manifest;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::yearmonth::YearMonth;

pub use levenshtein::{levenshtein, similarity_ratio};
pub use manifest::{PairsManifest, SkippedPolicy, PAIRS_FILE};

/// Ratio at or below which two consecutive snapshots differ significantly.
pub const DEFAULT_THRESHOLD: f64 = 0.95;

pub fn is_significant_change(ratio: f64, threshold: f64) -> bool {
    ratio <= threshold
}

/// Text of one snapshot at its month.
#[derive(Debug, Clone, Copy)]
pub struct DatedText<'a> {
    pub month: YearMonth,
    pub text: &'a str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub month: YearMonth,
    /// Similarity to the previous snapshot.
    pub similarity: f64,
}

/// Similarity of each snapshot to its predecessor. The first snapshot has
/// no point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySeries {
    pub policy_id: String,
    pub points: Vec<SeriesPoint>,
}

impl SimilaritySeries {
    /// `snapshots` must be sorted by month without repeats.
    pub fn compute(policy_id: &str, snapshots: &[DatedText<'_>]) -> Self {
        let points = snapshots
            .par_windows(2)
            .map(|w| SeriesPoint { month: w[1].month, similarity: similarity_ratio(w[0].text, w[1].text) })
            .collect();
        SimilaritySeries { policy_id: policy_id.to_string(), points }
    }

    fn similarity_at(&self, month: YearMonth) -> Option<f64> {
        self.points.iter().find(|p| p.month == month).map(|p| p.similarity)
    }
}

/// The significant-change month closest to `pivot`; ties go to the later month.
pub fn key_change_date(series: &SimilaritySeries, pivot: YearMonth, threshold: f64) -> Option<YearMonth> {
    series
        .points
        .iter()
        .filter(|p| is_significant_change(p.similarity, threshold))
        .map(|p| p.month)
        .min_by_key(|&m| (pivot.months_until(m).abs(), std::cmp::Reverse(m)))
}

/// Which stable snapshot before the key change becomes the "pre" version.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StableChoice {
    /// The stable snapshot closest to the key change.
    #[default]
    Latest,
    /// The earliest stable snapshot.
    Earliest,
}

#[derive(Debug, Clone, Copy)]
pub struct PairOptions {
    pub threshold: f64,
    pub stable: StableChoice,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions { threshold: DEFAULT_THRESHOLD, stable: StableChoice::Latest }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoPairReason {
    NoPre,
    NoPost,
}

impl fmt::Display for NoPairReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoPairReason::NoPre => "no-pre",
            NoPairReason::NoPost => "no-post",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairError {
    #[error("no pair: {0}")]
    NoPair(NoPairReason),
    #[error("more than one snapshot for {0}")]
    DuplicateMonth(YearMonth),
}

/// The selected before/after versions of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPair {
    pub policy_id: String,
    pub pre: YearMonth,
    pub post: YearMonth,
    pub key_change: Option<YearMonth>,
    pub unchanged: bool,
    pub series: SimilaritySeries,
}

/// Picks the pre/post snapshots of a policy around `pivot`.
///
/// `pre` is a stable snapshot (similarity to its predecessor above the
/// threshold, or no predecessor) strictly before both the key change and
/// the pivot month, falling back to the latest pre-pivot snapshot. `post`
/// is the latest snapshot after the pivot month. Without any significant
/// change the pair is the latest pre-pivot and the latest snapshot, marked
/// unchanged.
pub fn select_pair(
    policy_id: &str,
    snapshots: &[DatedText<'_>],
    pivot: YearMonth,
    options: &PairOptions,
) -> Result<SnapshotPair, PairError> {
    let mut sorted = snapshots.to_vec();
    sorted.sort_by_key(|s| s.month);
    if let Some(w) = sorted.windows(2).find(|w| w[0].month == w[1].month) {
        return Err(PairError::DuplicateMonth(w[0].month));
    }
    let latest_pre = sorted.iter().rev().find(|s| s.month < pivot).ok_or(PairError::NoPair(NoPairReason::NoPre))?.month;
    let post = sorted.iter().rev().find(|s| s.month > pivot).ok_or(PairError::NoPair(NoPairReason::NoPost))?.month;

    let series = SimilaritySeries::compute(policy_id, &sorted);
    let key_change = key_change_date(&series, pivot, options.threshold);
    let pre = match key_change {
        None => latest_pre,
        Some(change) => {
            let stable = |s: &&DatedText<'_>| {
                s.month < change
                    && s.month < pivot
                    && series.similarity_at(s.month).is_none_or(|r| !is_significant_change(r, options.threshold))
            };
            let pick = match options.stable {
                StableChoice::Latest => sorted.iter().rev().find(stable),
                StableChoice::Earliest => sorted.iter().find(stable),
            };
            pick.map(|s| s.month).unwrap_or(latest_pre)
        }
    };
    Ok(SnapshotPair {
        policy_id: policy_id.to_string(),
        pre,
        post,
        key_change,
        unchanged: key_change.is_none(),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    fn series(points: &[(&str, f64)]) -> SimilaritySeries {
        SimilaritySeries {
            policy_id: "p".into(),
            points: points.iter().map(|(m, s)| SeriesPoint { month: ym(m), similarity: *s }).collect(),
        }
    }

    #[test]
    fn significance_boundary() {
        assert!(is_significant_change(0.95, DEFAULT_THRESHOLD));
        assert!(!is_significant_change(0.951, DEFAULT_THRESHOLD));
        assert!(!is_significant_change(0.9500001, DEFAULT_THRESHOLD));
        assert!(is_significant_change(0.20, DEFAULT_THRESHOLD));
    }

    #[test]
    fn key_change_closest_to_pivot() {
        let s = series(&[("2017-03", 0.5), ("2017-04", 0.99), ("2018-06", 0.7)]);
        assert_eq!(key_change_date(&s, ym("2018-05"), 0.95), Some(ym("2018-06")));
    }

    #[test]
    fn key_change_none_without_significant_change() {
        let s = series(&[("2017-03", 0.99), ("2018-06", 0.97)]);
        assert_eq!(key_change_date(&s, ym("2018-05"), 0.95), None);
    }

    #[test]
    fn key_change_tie_prefers_later_month() {
        let s = series(&[("2018-04", 0.5), ("2018-06", 0.5)]);
        assert_eq!(key_change_date(&s, ym("2018-05"), 0.95), Some(ym("2018-06")));
        let reversed = series(&[("2018-06", 0.5), ("2018-04", 0.5)]);
        assert_eq!(key_change_date(&reversed, ym("2018-05"), 0.95), Some(ym("2018-06")));
    }

    fn monthly(from: &str, to: &str, text_for: impl Fn(YearMonth) -> String) -> Vec<(YearMonth, String)> {
        YearMonth::range_inclusive(ym(from), ym(to)).map(|m| (m, text_for(m))).collect()
    }

    fn dated(v: &[(YearMonth, String)]) -> Vec<DatedText<'_>> {
        v.iter().map(|(m, t)| DatedText { month: *m, text: t }).collect()
    }

    #[test]
    fn single_change_after_pivot() {
        let old = "We collect your name and email address to run the service.".repeat(4);
        let new = "Under the GDPR you may access, rectify or erase personal data held about you.".repeat(4);
        let snaps = monthly("2017-01", "2019-04", |m| if m < ym("2018-06") { old.clone() } else { new.clone() });
        let pair = select_pair("p", &dated(&snaps), ym("2018-05"), &PairOptions::default()).unwrap();
        assert_eq!(pair.key_change, Some(ym("2018-06")));
        assert_eq!(pair.pre, ym("2018-04"));
        assert_eq!(pair.post, ym("2019-04"));
        assert!(!pair.unchanged);
        assert_eq!(pair.series.points.len(), snaps.len() - 1);

        let earliest = PairOptions { stable: StableChoice::Earliest, ..PairOptions::default() };
        let pair = select_pair("p", &dated(&snaps), ym("2018-05"), &earliest).unwrap();
        assert_eq!(pair.pre, ym("2017-01"));
    }

    #[test]
    fn churn_before_change_is_skipped() {
        let base = "Policy text that stays the same for a long while. ".repeat(3);
        let snaps = vec![
            (ym("2017-10"), base.clone()),
            (ym("2017-11"), base.clone()),
            (ym("2018-02"), "Completely rewritten draft number one.".to_string()),
            (ym("2018-03"), base.clone()),
            (ym("2018-09"), "A final policy after the deadline was reached.".to_string()),
        ];
        let pair = select_pair("p", &dated(&snaps), ym("2018-05"), &PairOptions::default()).unwrap();
        // 2018-03 reverts the draft and sits closest to the pivot.
        assert_eq!(pair.key_change, Some(ym("2018-03")));
        // 2018-02 follows a significant change itself.
        assert_eq!(pair.pre, ym("2017-11"));
        assert_eq!(pair.post, ym("2018-09"));
    }

    #[test]
    fn no_post_snapshot() {
        let snaps = monthly("2017-01", "2018-05", |_| "same".to_string());
        assert_eq!(
            select_pair("p", &dated(&snaps), ym("2018-05"), &PairOptions::default()),
            Err(PairError::NoPair(NoPairReason::NoPost))
        );
    }

    #[test]
    fn no_pre_snapshot() {
        let snaps = monthly("2018-05", "2019-01", |_| "same".to_string());
        assert_eq!(
            select_pair("p", &dated(&snaps), ym("2018-05"), &PairOptions::default()),
            Err(PairError::NoPair(NoPairReason::NoPre))
        );
    }

    #[test]
    fn unchanged_policy() {
        let snaps = monthly("2016-01", "2019-05", |_| "Identical text every month.".to_string());
        let pair = select_pair("p", &dated(&snaps), ym("2018-05"), &PairOptions::default()).unwrap();
        assert!(pair.unchanged);
        assert_eq!(pair.key_change, None);
        assert_eq!(pair.pre, ym("2018-04"));
        assert_eq!(pair.post, ym("2019-05"));
        let text_of = |m: YearMonth| &snaps.iter().find(|(x, _)| *x == m).unwrap().1;
        assert_eq!(text_of(pair.pre), text_of(pair.post));
    }

    #[test]
    fn duplicate_months_rejected() {
        let snaps = vec![(ym("2018-01"), "a".to_string()), (ym("2018-01"), "b".to_string())];
        assert_eq!(
            select_pair("p", &dated(&snaps), ym("2018-05"), &PairOptions::default()),
            Err(PairError::DuplicateMonth(ym("2018-01")))
        );
    }
}
