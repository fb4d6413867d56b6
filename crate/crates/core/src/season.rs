use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Meteorological season. Winter is grouped by calendar year: January and
/// February followed by December of the same year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Fall];

    pub fn of_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Fall,
            _ => panic!("month {month} out of range"),
        }
    }

    pub fn of_date(date: NaiveDate) -> Season {
        Season::of_month(date.month())
    }

    pub fn months(self) -> [u32; 3] {
        match self {
            Season::Winter => [1, 2, 12],
            Season::Spring => [3, 4, 5],
            Season::Summer => [6, 7, 8],
            Season::Fall => [9, 10, 11],
        }
    }

    /// Day count with February 29 excluded.
    pub fn length(self) -> usize {
        match self {
            Season::Winter => 90,
            Season::Spring | Season::Summer => 92,
            Season::Fall => 91,
        }
    }

    /// Zero-based position of `date` within its season (Feb 29 has none).
    pub fn day_index(date: NaiveDate) -> Option<(Season, usize)> {
        let (m, d) = (date.month(), date.day() as usize);
        if m == 2 && d == 29 {
            return None;
        }
        let idx = match m {
            1 => d - 1,
            2 => 31 + d - 1,
            12 => 59 + d - 1,
            3 | 6 => d - 1,
            4 => 31 + d - 1,
            7 => 30 + d - 1,
            5 => 61 + d - 1,
            8 => 61 + d - 1,
            9 => d - 1,
            10 => 30 + d - 1,
            11 => 61 + d - 1,
            _ => unreachable!(),
        };
        Some((Season::of_month(m), idx))
    }

    pub fn name(self) -> &'static str {
        match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "winter" => Ok(Season::Winter),
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "fall" | "autumn" => Ok(Season::Fall),
            other => Err(format!("unknown season '{other}'")),
        }
    }
}

/// A scan period: one of the four seasons, or the whole year for the
/// season-independent approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Winter,
    Spring,
    Summer,
    Fall,
    Annual,
}

impl Period {
    pub fn season(self) -> Option<Season> {
        match self {
            Period::Winter => Some(Season::Winter),
            Period::Spring => Some(Season::Spring),
            Period::Summer => Some(Season::Summer),
            Period::Fall => Some(Season::Fall),
            Period::Annual => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Period::Annual => "annual",
            p => p.season().unwrap().name(),
        }
    }
}

impl From<Season> for Period {
    fn from(s: Season) -> Self {
        match s {
            Season::Winter => Period::Winter,
            Season::Spring => Period::Spring,
            Season::Summer => Period::Summer,
            Season::Fall => Period::Fall,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_index_covers_each_season_exactly() {
        let mut seen = std::collections::BTreeMap::<Season, Vec<usize>>::new();
        let mut d = NaiveDate::from_ymd_opt(2011, 1, 1).unwrap();
        while d.year() == 2011 {
            let (s, i) = Season::day_index(d).unwrap();
            assert_eq!(s, Season::of_date(d));
            seen.entry(s).or_default().push(i);
            d = d.succ_opt().unwrap();
        }
        for s in Season::ALL {
            let idx = &seen[&s];
            assert_eq!(idx.len(), s.length());
            assert_eq!(*idx, (0..s.length()).collect::<Vec<_>>(), "{s}");
        }
    }

    #[test]
    fn leap_day_has_no_index() {
        let d = NaiveDate::from_ymd_opt(2012, 2, 29).unwrap();
        assert_eq!(Season::day_index(d), None);
        let dec1 = NaiveDate::from_ymd_opt(2012, 12, 1).unwrap();
        assert_eq!(Season::day_index(dec1), Some((Season::Winter, 59)));
    }
}
