use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{NormalizedDayMatrix, NormativeDayProfile};
use crate::{Error, Result, Season, SLOTS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRecord {
    pub date: NaiveDate,
    /// 1-based half-hour slot.
    pub slot: usize,
    pub value: f64,
    pub bound: f64,
    pub kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub season: Season,
    pub tested_slots: usize,
    pub outliers: usize,
    pub percentage: f64,
    pub records: Vec<OutlierRecord>,
}

/// Tests every normalized slot of `profile.season`'s days in `test` against
/// the closed envelope `[NORMP - NETMINV, NORMP + NETMAXV]`.
///
/// All test years are pooled into one report.
pub fn detect_outliers(test: &NormalizedDayMatrix, profile: &NormativeDayProfile) -> Result<OutlierReport> {
    let season = profile.season;
    let mut tested = 0;
    let mut records = Vec::new();
    for (_, day) in test.season_days(season) {
        for h in 0..SLOTS_PER_DAY {
            tested += 1;
            let v = day.values[h];
            let (lo, hi) = (profile.lower(h), profile.upper(h));
            let hit = if v > hi {
                Some((hi, BoundKind::Upper))
            } else if v < lo {
                Some((lo, BoundKind::Lower))
            } else {
                None
            };
            if let Some((bound, kind)) = hit {
                records.push(OutlierRecord {
                    date: day.date,
                    slot: h + 1,
                    value: v,
                    bound,
                    kind,
                });
            }
        }
    }
    if tested == 0 {
        return Err(Error::Argument(format!(
            "test data contains no {season} days for the {season} profile"
        )));
    }
    Ok(OutlierReport {
        season,
        tested_slots: tested,
        outliers: records.len(),
        percentage: 100.0 * records.len() as f64 / tested as f64,
        records,
    })
}
