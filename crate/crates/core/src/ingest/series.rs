use std::path::Path;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, NaiveDateTime, Timelike};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SLOTS_PER_DAY};

/// Longest run of consecutive missing slots that is linearly interpolated.
pub const MAX_REPAIR_GAP: usize = 2;

/// Speeds at or above this are treated as sensor faults.
pub const MAX_SPEED_MS: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesMode {
    /// Wind power output in MW.
    Power,
    /// Wind speed in m/s.
    Speed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDay {
    pub date: NaiveDate,
    pub values: [f64; SLOTS_PER_DAY],
}

/// Whole-day 30-minute measurement sequence.
///
/// Days are stored in strictly increasing date order; within a day slot `k`
/// starts at `00:00 + 30k min` in the recorded UTC offset. Days removed by
/// gap handling leave a date discontinuity, never a partial day.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfHourlySeries {
    mode: SeriesMode,
    offset: FixedOffset,
    days: Vec<SeriesDay>,
}

impl HalfHourlySeries {
    /// Builds a series from whole days, checking every invariant.
    pub fn from_days(mode: SeriesMode, offset: FixedOffset, days: Vec<SeriesDay>) -> Result<Self> {
        for w in days.windows(2) {
            if w[1].date <= w[0].date {
                return Err(Error::Structure(format!(
                    "day {} does not follow {}",
                    w[1].date, w[0].date
                )));
            }
        }
        for day in &days {
            for &v in &day.values {
                let ok = v.is_finite() && v >= 0.0 && (mode == SeriesMode::Power || v < MAX_SPEED_MS);
                if !ok {
                    return Err(Error::Structure(format!("invalid value {v} on {}", day.date)));
                }
            }
        }
        Ok(HalfHourlySeries { mode, offset, days })
    }

    pub fn mode(&self) -> SeriesMode {
        self.mode
    }

    pub fn offset(&self) -> FixedOffset {
        self.offset
    }

    pub fn days(&self) -> &[SeriesDay] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len() * SLOTS_PER_DAY
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn start_timestamp(&self) -> Option<DateTime<FixedOffset>> {
        let first = self.days.first()?;
        first
            .date
            .and_hms_opt(0, 0, 0)?
            .and_local_timezone(self.offset)
            .single()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.days.iter().flat_map(|d| d.values.iter().copied())
    }

    /// Days whose calendar year lies in `years`.
    pub fn filter_years(&self, years: std::ops::RangeInclusive<i32>) -> HalfHourlySeries {
        HalfHourlySeries {
            mode: self.mode,
            offset: self.offset,
            days: self
                .days
                .iter()
                .filter(|d| years.contains(&d.date.year()))
                .cloned()
                .collect(),
        }
    }

    /// Concatenates series of the same mode, keeping dates strictly increasing.
    pub fn concat(parts: Vec<HalfHourlySeries>) -> Result<HalfHourlySeries> {
        let mut iter = parts.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::EmptyInput("no series to concatenate".into()))?;
        for p in iter {
            if p.mode != out.mode {
                return Err(Error::Argument("cannot mix power and speed series".into()));
            }
            out.days.extend(p.days);
        }
        out.days.sort_by_key(|d| d.date);
        HalfHourlySeries::from_days(out.mode, out.offset, out.days)
    }

    /// Multiplies every value by `factor` (power mode only).
    pub fn scaled(&self, factor: f64) -> HalfHourlySeries {
        let mut out = self.clone();
        for d in &mut out.days {
            for v in &mut d.values {
                *v *= factor;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The day contains a gap longer than [`MAX_REPAIR_GAP`] or at the edge
    /// of the record.
    Gap,
    LeapDay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedDay {
    pub date: NaiveDate,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingInterval {
    pub start: NaiveDateTime,
    pub slots: usize,
    pub repaired: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub missing: Vec<MissingInterval>,
    /// Interpolated slots that survive into the output series.
    pub repaired_count: usize,
    pub dropped_days: Vec<DroppedDay>,
    /// Negative power readings raised to zero.
    pub clamped_count: usize,
    /// Slots in the first-to-last-day range of the input.
    pub expected_slots: usize,
    /// Original readings present in the output series.
    pub retained_original: usize,
}

impl GapReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.dropped_days.is_empty() && self.clamped_count == 0
    }
}

fn parse_timestamp(raw: &str) -> std::result::Result<DateTime<FixedOffset>, String> {
    let raw = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(t.and_utc().fixed_offset());
        }
    }
    Err(format!("malformed timestamp '{raw}'"))
}

/// Reads a `timestamp,value` CSV file. See [`parse_wind_series_str`].
pub fn parse_wind_series(path: &Path, mode: SeriesMode) -> Result<(HalfHourlySeries, GapReport)> {
    let text = super::read_to_string(path)?;
    parse_wind_series_str(&text, mode)
}

/// Parses a `timestamp,value` CSV into whole days.
///
/// Runs of at most [`MAX_REPAIR_GAP`] missing slots with readings on both
/// sides are linearly interpolated; any longer run (or one touching the
/// start or end of the record) drops every day it touches. February 29 is
/// dropped so that all winters share one day grid. Empty, non-finite or
/// out-of-range values count as missing; negative power is clamped to zero.
pub fn parse_wind_series_str(text: &str, mode: SeriesMode) -> Result<(HalfHourlySeries, GapReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("timestamp") || !headers[1].eq_ignore_ascii_case("value") {
        return Err(Error::parse(1, "expected header 'timestamp,value'"));
    }

    let mut report = GapReport::default();
    let mut offset: Option<FixedOffset> = None;
    let mut rows: Vec<(NaiveDateTime, Option<f64>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let ts = parse_timestamp(rec.get(0).unwrap_or("")).map_err(|m| Error::parse(line, m))?;
        let off = *offset.get_or_insert(*ts.offset());
        let local = ts.with_timezone(&off).naive_local();
        if local.second() != 0 || local.nanosecond() != 0 || local.minute() % 30 != 0 {
            return Err(Error::parse(line, format!("timestamp {local} is not on a 30-minute boundary")));
        }
        if let Some((prev, _)) = rows.last() {
            if local <= *prev {
                return Err(Error::Structure(format!(
                    "line {line}: timestamp {local} does not increase (previous {prev})"
                )));
            }
        }
        let raw = rec.get(1).unwrap_or("").trim();
        let value = if raw.is_empty() {
            None
        } else {
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::parse(line, format!("malformed value '{raw}'")))?;
            match mode {
                _ if !v.is_finite() => None,
                SeriesMode::Power if v < 0.0 => {
                    report.clamped_count += 1;
                    Some(0.0)
                }
                SeriesMode::Speed if !(0.0..MAX_SPEED_MS).contains(&v) => None,
                _ => Some(v),
            }
        };
        rows.push((local, value));
    }
    if report.clamped_count > 0 {
        warn!("clamped {} negative power readings to 0", report.clamped_count);
    }

    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(Error::EmptyInput("no data rows".into()));
    };
    let first_day = first.0.date();
    let n_days = (last.0.date() - first_day).num_days() as usize + 1;
    let n = n_days * SLOTS_PER_DAY;
    report.expected_slots = n;

    let mut timeline: Vec<Option<f64>> = vec![None; n];
    for (t, v) in &rows {
        let day = (t.date() - first_day).num_days() as usize;
        let slot = (t.hour() * 2 + t.minute() / 30) as usize;
        timeline[day * SLOTS_PER_DAY + slot] = *v;
    }
    let original: Vec<bool> = timeline.iter().map(Option::is_some).collect();

    let mut drop_day = vec![false; n_days];
    let mut k = 0;
    while k < n {
        if timeline[k].is_some() {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && timeline[k].is_none() {
            k += 1;
        }
        let len = k - start;
        let repairable = len <= MAX_REPAIR_GAP && start > 0 && k < n;
        if repairable {
            let (a, b) = (timeline[start - 1].unwrap(), timeline[k].unwrap());
            for (j, slot) in timeline[start..k].iter_mut().enumerate() {
                let w = (j + 1) as f64 / (len + 1) as f64;
                *slot = Some(a + (b - a) * w);
            }
        } else {
            for day in start / SLOTS_PER_DAY..=(k - 1) / SLOTS_PER_DAY {
                drop_day[day] = true;
            }
        }
        report.missing.push(MissingInterval {
            start: first_day.and_hms_opt(0, 0, 0).unwrap() + Duration::minutes(30 * start as i64),
            slots: len,
            repaired: repairable,
        });
    }

    let mut days = Vec::new();
    for (d, dropped) in drop_day.iter().enumerate() {
        let date = first_day + Duration::days(d as i64);
        let reason = if *dropped {
            Some(DropReason::Gap)
        } else if date.month() == 2 && date.day() == 29 {
            Some(DropReason::LeapDay)
        } else {
            None
        };
        if let Some(reason) = reason {
            report.dropped_days.push(DroppedDay { date, reason });
            continue;
        }
        let range = d * SLOTS_PER_DAY..(d + 1) * SLOTS_PER_DAY;
        let mut values = [0.0; SLOTS_PER_DAY];
        for (slot, k) in range.enumerate() {
            values[slot] = timeline[k].expect("retained day has no missing slot");
            if original[k] {
                report.retained_original += 1;
            } else {
                report.repaired_count += 1;
            }
        }
        days.push(SeriesDay { date, values });
    }
    let gap_days = report.dropped_days.iter().filter(|d| d.reason == DropReason::Gap).count();
    if report.repaired_count > 0 || gap_days > 0 {
        warn!(
            "repaired {} slots, dropped {} days with long gaps",
            report.repaired_count, gap_days
        );
    }
    if days.is_empty() {
        return Err(Error::EmptyInput("no complete days after gap handling".into()));
    }
    let series = HalfHourlySeries::from_days(mode, offset.unwrap(), days)?;
    Ok((series, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv_for(days: usize, skip: impl Fn(usize) -> bool, value: impl Fn(usize) -> f64) -> String {
        let start = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let mut s = String::from("timestamp,value\n");
        for k in 0..days * SLOTS_PER_DAY {
            if skip(k) {
                continue;
            }
            let t = start + Duration::minutes(30 * k as i64);
            s.push_str(&format!("{},{}\n", t.format("%Y-%m-%dT%H:%M:%S"), value(k)));
        }
        s
    }

    #[test]
    fn clean_input_passes_through() {
        let text = csv_for(2, |_| false, |k| k as f64);
        let (s, r) = parse_wind_series_str(&text, SeriesMode::Power).unwrap();
        assert_eq!(s.len(), 96);
        assert!(r.is_clean());
        assert_eq!(r.repaired_count, 0);
        assert_eq!(s.values().nth(50), Some(50.0));
    }

    #[test]
    fn single_gap_is_interpolated() {
        // 00:30 on day 1 is missing
        let text = csv_for(2, |k| k == 1, |k| 10.0 * k as f64);
        let (s, r) = parse_wind_series_str(&text, SeriesMode::Power).unwrap();
        assert_eq!(s.len(), 96);
        assert_eq!(r.repaired_count, 1);
        assert_eq!(s.days()[0].values[1], (0.0 + 20.0) / 2.0);
    }

    #[test]
    fn long_gap_drops_day() {
        let text = csv_for(2, |k| (60..80).contains(&k), |_| 5.0);
        let (s, r) = parse_wind_series_str(&text, SeriesMode::Power).unwrap();
        assert_eq!(s.len(), 48);
        let day2 = NaiveDate::from_ymd_opt(2010, 3, 2).unwrap();
        assert_eq!(r.dropped_days, vec![DroppedDay { date: day2, reason: DropReason::Gap }]);
        assert_eq!(s.days()[0].date, NaiveDate::from_ymd_opt(2010, 3, 1).unwrap());
    }

    #[test]
    fn gap_at_record_edge_cannot_be_interpolated() {
        let text = csv_for(2, |k| k == 0, |_| 5.0);
        let (s, r) = parse_wind_series_str(&text, SeriesMode::Power).unwrap();
        assert_eq!(s.len(), 48);
        assert_eq!(r.dropped_days.len(), 1);
    }

    #[test]
    fn malformed_timestamp_reports_line() {
        let text = "timestamp,value\n2010-01-01T00:00:00,1\nnot-a-time,2\n";
        match parse_wind_series_str(text, SeriesMode::Power) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_monotone_timestamps_are_structural() {
        let text = "timestamp,value\n2010-01-01T00:30:00,1\n2010-01-01T00:00:00,2\n";
        assert!(matches!(
            parse_wind_series_str(text, SeriesMode::Power),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn no_complete_day_is_empty_input() {
        let text = "timestamp,value\n2010-01-01T00:00:00,1\n2010-01-01T12:00:00,2\n";
        assert!(matches!(
            parse_wind_series_str(text, SeriesMode::Power),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            parse_wind_series_str("timestamp,value\n", SeriesMode::Power),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn negative_power_is_clamped_and_speed_outliers_missing() {
        let text = csv_for(1, |_| false, |k| if k == 5 { -3.0 } else { 4.0 });
        let (s, r) = parse_wind_series_str(&text, SeriesMode::Power).unwrap();
        assert_eq!(r.clamped_count, 1);
        assert_eq!(s.days()[0].values[5], 0.0);

        let text = csv_for(1, |_| false, |k| if k == 5 { 400.0 } else { 4.0 });
        let (s, r) = parse_wind_series_str(&text, SeriesMode::Speed).unwrap();
        assert_eq!(r.repaired_count, 1);
        assert_eq!(s.days()[0].values[5], 4.0);
    }

    #[test]
    fn leap_day_is_dropped() {
        let mut s = String::from("timestamp,value\n");
        let start = NaiveDate::from_ymd_opt(2012, 2, 28).unwrap().and_hms_opt(0, 0, 0).unwrap();
        for k in 0..3 * 48 {
            let t = start + Duration::minutes(30 * k);
            s.push_str(&format!("{},1\n", t.format("%Y-%m-%d %H:%M")));
        }
        let (series, r) = parse_wind_series_str(&s, SeriesMode::Power).unwrap();
        assert_eq!(series.days().len(), 2);
        assert_eq!(r.dropped_days[0].reason, DropReason::LeapDay);
    }

    #[test]
    fn offsets_are_respected() {
        let mut s = String::from("timestamp,value\n");
        let start = DateTime::parse_from_rfc3339("2010-06-01T00:00:00-08:00").unwrap();
        for k in 0..48 {
            let t = start + Duration::minutes(30 * k);
            s.push_str(&format!("{},{}\n", t.to_rfc3339(), k));
        }
        let (series, _) = parse_wind_series_str(&s, SeriesMode::Power).unwrap();
        assert_eq!(series.start_timestamp().unwrap(), start);
        assert_eq!(series.days()[0].values[47], 47.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn corrupted_input_still_satisfies_invariants(
            days in 1usize..5,
            holes in proptest::collection::vec((0usize..240, 1usize..6), 0..8),
            negatives in proptest::collection::vec(0usize..240, 0..5),
        ) {
            let n = days * SLOTS_PER_DAY;
            let missing = |k: usize| holes.iter().any(|&(s, l)| k >= s && k < s + l);
            let text = csv_for(days, |k| k < n && missing(k) && k != 0 && k != n - 1, |k| {
                if negatives.contains(&k) { -1.0 } else { (k % 17) as f64 }
            });
            match parse_wind_series_str(&text, SeriesMode::Power) {
                Ok((s, r)) => {
                    prop_assert_eq!(s.len() % SLOTS_PER_DAY, 0);
                    prop_assert!(s.values().all(|v| v >= 0.0 && v.is_finite()));
                    for w in s.days().windows(2) {
                        prop_assert!(w[0].date < w[1].date);
                    }
                    for d in &r.dropped_days {
                        prop_assert!(s.days().iter().all(|x| x.date != d.date));
                    }
                    prop_assert!(r.repaired_count <= r.expected_slots);
                    prop_assert_eq!(
                        r.repaired_count + r.dropped_days.len() * SLOTS_PER_DAY + r.retained_original,
                        r.expected_slots
                    );
                }
                Err(Error::EmptyInput(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
