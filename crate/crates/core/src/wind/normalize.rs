use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use log::info;

use crate::ingest::{HalfHourlySeries, SeriesMode};
use crate::{Error, Result, Season, SLOTS_PER_DAY};

/// Days whose first-slot output is at or below this are not normalized.
pub const REFERENCE_FLOOR_MW: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDay {
    pub date: NaiveDate,
    /// Day values divided by the first slot; `values[0] == 1.0`.
    pub values: [f64; SLOTS_PER_DAY],
    pub reference_mw: f64,
}

impl NormalizedDay {
    pub fn actual_mw(&self, slot: usize) -> f64 {
        self.values[slot] * self.reference_mw
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizedDayMatrix {
    pub days: Vec<NormalizedDay>,
    /// Days skipped because the reference slot was at or below the floor.
    pub excluded: Vec<NaiveDate>,
}

impl NormalizedDayMatrix {
    pub fn by_year(&self) -> BTreeMap<i32, NormalizedDayMatrix> {
        let mut out: BTreeMap<i32, NormalizedDayMatrix> = BTreeMap::new();
        for d in &self.days {
            out.entry(d.date.year()).or_default().days.push(d.clone());
        }
        for d in &self.excluded {
            out.entry(d.year()).or_default().excluded.push(*d);
        }
        out
    }

    /// `(day-of-season index, day)` for every day in `season`.
    pub fn season_days(&self, season: Season) -> impl Iterator<Item = (usize, &NormalizedDay)> {
        self.days.iter().filter_map(move |d| match Season::day_index(d.date) {
            Some((s, i)) if s == season => Some((i, d)),
            _ => None,
        })
    }
}

/// Divides each day by its first recorded half-hour.
pub fn normalize_days(series: &HalfHourlySeries) -> Result<NormalizedDayMatrix> {
    if series.mode() != SeriesMode::Power {
        return Err(Error::Argument("normalization needs a power-mode series".into()));
    }
    if series.is_empty() {
        return Err(Error::EmptyInput("series has no days".into()));
    }
    let mut out = NormalizedDayMatrix::default();
    for day in series.days() {
        let reference = day.values[0];
        if reference <= REFERENCE_FLOOR_MW {
            out.excluded.push(day.date);
            continue;
        }
        let mut values = [0.0; SLOTS_PER_DAY];
        values[0] = 1.0;
        for h in 1..SLOTS_PER_DAY {
            values[h] = day.values[h] / reference;
        }
        out.days.push(NormalizedDay {
            date: day.date,
            values,
            reference_mw: reference,
        });
    }
    if !out.excluded.is_empty() {
        info!(
            "excluded {} days with reference output at or below {REFERENCE_FLOOR_MW} MW",
            out.excluded.len()
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SeriesDay;
    use chrono::FixedOffset;

    fn series(days: Vec<[f64; SLOTS_PER_DAY]>) -> HalfHourlySeries {
        let start = NaiveDate::from_ymd_opt(2009, 6, 1).unwrap();
        let days = days
            .into_iter()
            .enumerate()
            .map(|(i, values)| SeriesDay {
                date: start + chrono::Duration::days(i as i64),
                values,
            })
            .collect();
        HalfHourlySeries::from_days(SeriesMode::Power, FixedOffset::east_opt(0).unwrap(), days).unwrap()
    }

    #[test]
    fn divides_by_reference() {
        let mut d = [100.0; SLOTS_PER_DAY];
        d[1] = 50.0;
        d[2] = 200.0;
        let m = normalize_days(&series(vec![d])).unwrap();
        assert_eq!(&m.days[0].values[..3], &[1.0, 0.5, 2.0]);
        assert_eq!(m.days[0].reference_mw, 100.0);
        assert_eq!(m.days[0].actual_mw(2), 200.0);
    }

    #[test]
    fn zero_reference_day_is_excluded() {
        let mut d = [10.0; SLOTS_PER_DAY];
        d[0] = 0.0;
        let m = normalize_days(&series(vec![d, [70.0; SLOTS_PER_DAY]])).unwrap();
        assert_eq!(m.days.len(), 1);
        assert_eq!(m.excluded.len(), 1);
        assert!(m.days.iter().all(|d| d.reference_mw > REFERENCE_FLOOR_MW));
    }

    #[test]
    fn constant_day_normalizes_to_ones() {
        let m = normalize_days(&series(vec![[70.0; SLOTS_PER_DAY]])).unwrap();
        assert_eq!(m.days[0].values, [1.0; SLOTS_PER_DAY]);
    }

    #[test]
    fn empty_series_is_rejected() {
        let empty = HalfHourlySeries::from_days(SeriesMode::Power, FixedOffset::east_opt(0).unwrap(), vec![]).unwrap();
        assert!(matches!(normalize_days(&empty), Err(Error::EmptyInput(_))));
    }
}
