//! Monthly timestamps, the resolution at which snapshots are kept.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid year-month {0:?}; expected YYYY-MM")]
pub struct ParseYearMonthError(pub String);

/// A calendar month, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12).contains(&month).then_some(YearMonth { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        YearMonth { year: ord.div_euclid(12) as i32, month: (ord.rem_euclid(12) + 1) as u8 }
    }

    /// Signed number of whole months from `self` to `other`.
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.ordinal() - self.ordinal()
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    /// Every month from `from` through `to`, inclusive.
    pub fn range_inclusive(from: YearMonth, to: YearMonth) -> impl Iterator<Item = YearMonth> {
        (from.ordinal()..=to.ordinal()).map(Self::from_ordinal)
    }

    /// Parses the leading `YYYYMM` of a 14-digit archive timestamp.
    pub fn from_archive_timestamp(ts: &str) -> Option<Self> {
        if ts.len() < 6 || !ts.as_bytes()[..6].iter().all(u8::is_ascii_digit) {
            return None;
        }
        let year = ts[..4].parse().ok()?;
        let month = ts[4..6].parse().ok()?;
        Self::new(year, month)
    }

    /// `YYYYMM`, as used in archive query parameters.
    pub fn compact(self) -> String {
        format!("{:04}{:02}", self.year, self.month)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = ParseYearMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseYearMonthError(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        let year = y.parse().map_err(|_| err())?;
        let month = m.parse().map_err(|_| err())?;
        YearMonth::new(year, month).ok_or_else(err)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_displays() {
        assert_eq!(ym("2018-05").to_string(), "2018-05");
        assert!("2018-13".parse::<YearMonth>().is_err());
        assert!("2018-5".parse::<YearMonth>().is_err());
        assert!("201805".parse::<YearMonth>().is_err());
    }

    #[test]
    fn month_arithmetic() {
        assert_eq!(ym("2017-03").months_until(ym("2018-05")), 14);
        assert_eq!(ym("2018-06").months_until(ym("2018-05")), -1);
        assert_eq!(ym("2018-12").succ(), ym("2019-01"));
        let months: Vec<_> = YearMonth::range_inclusive(ym("2018-11"), ym("2019-02")).collect();
        assert_eq!(months.len(), 4);
        assert_eq!(months[2], ym("2019-01"));
    }

    #[test]
    fn archive_timestamps() {
        assert_eq!(YearMonth::from_archive_timestamp("20180612093000"), Some(ym("2018-06")));
        assert_eq!(YearMonth::from_archive_timestamp("2018"), None);
        assert_eq!(ym("2016-01").compact(), "201601");
    }
}
