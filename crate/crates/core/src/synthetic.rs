//! Seeded synthetic wind histories.
//!
//! Each day draws a lognormal weather level from a daily AR(1) process.
//! Within the day, output follows the season's sinusoidal daily shape times
//! a lognormal half-hourly AR(1) factor, clipped to a floor and a ceiling.
//! Speed is driven by the same weather states so the two series agree on
//! calm and windy spells.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use chrono::{Datelike, FixedOffset, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ingest::{HalfHourlySeries, SeriesDay, SeriesMode};
use crate::{Error, Result, Season, SLOTS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonClimate {
    /// Mean capacity factor.
    pub level: f64,
    /// Relative amplitude of the daily cycle.
    pub diurnal: f64,
    /// Slot (0-based) of the daily maximum.
    pub peak_slot: f64,
    /// Standard deviation of the log half-hourly factor.
    pub sigma: f64,
    /// Mean hub-height speed, m/s.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSynth {
    pub seed: u64,
    pub capacity_mw: f64,
    /// Standard deviation of the log daily weather level.
    pub day_sigma: f64,
    /// Day-to-day AR(1) coefficient.
    pub day_persistence: f64,
    /// Slot-to-slot AR(1) coefficient of the half-hourly factor.
    pub slot_persistence: f64,
    /// Output never drops below this share of capacity.
    pub floor: f64,
    pub ceiling: f64,
    /// UTC offset in hours for the timestamps.
    pub utc_offset_hours: i32,
    pub winter: SeasonClimate,
    pub spring: SeasonClimate,
    pub summer: SeasonClimate,
    pub fall: SeasonClimate,
}

impl Default for WindSynth {
    fn default() -> Self {
        WindSynth {
            seed: 7,
            capacity_mw: 4500.0,
            day_sigma: 0.7,
            day_persistence: 0.7,
            slot_persistence: 0.9,
            floor: 0.05,
            ceiling: 0.95,
            utc_offset_hours: -8,
            winter: SeasonClimate {
                level: 0.24,
                diurnal: 0.05,
                peak_slot: 36.0,
                sigma: 0.08,
                speed: 6.8,
            },
            spring: SeasonClimate {
                level: 0.33,
                diurnal: 0.25,
                peak_slot: 36.0,
                sigma: 0.16,
                speed: 7.4,
            },
            summer: SeasonClimate {
                level: 0.42,
                diurnal: 0.30,
                peak_slot: 38.0,
                sigma: 0.16,
                speed: 7.9,
            },
            fall: SeasonClimate {
                level: 0.25,
                diurnal: 0.08,
                peak_slot: 36.0,
                sigma: 0.08,
                speed: 7.0,
            },
        }
    }
}

/// Standardized weather states of one day.
struct Weather {
    date: NaiveDate,
    day: f64,
    slots: [f64; SLOTS_PER_DAY],
}

impl WindSynth {
    pub fn climate(&self, s: Season) -> &SeasonClimate {
        match s {
            Season::Winter => &self.winter,
            Season::Spring => &self.spring,
            Season::Summer => &self.summer,
            Season::Fall => &self.fall,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.capacity_mw > 0.0
            && (0.0..1.0).contains(&self.day_persistence)
            && (0.0..1.0).contains(&self.slot_persistence)
            && self.day_sigma >= 0.0
            && 0.0 < self.floor
            && self.floor < self.ceiling
            && self.ceiling <= 1.0
            && Season::ALL.iter().all(|&s| {
                let c = self.climate(s);
                c.level > 0.0 && c.sigma >= 0.0 && (0.0..1.0).contains(&c.diurnal) && c.speed > 0.0
            });
        if ok {
            Ok(())
        } else {
            Err(Error::Argument("synthetic wind parameters out of range".into()))
        }
    }

    fn offset(&self) -> Result<FixedOffset> {
        FixedOffset::east_opt(self.utc_offset_hours * 3600)
            .ok_or_else(|| Error::Argument(format!("UTC offset {}h out of range", self.utc_offset_hours)))
    }

    /// Weather for every non-leap day of `years`.
    fn weather(&self, years: &RangeInclusive<i32>) -> Vec<Weather> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (pd, ps) = (self.day_persistence, self.slot_persistence);
        let (id, is) = ((1.0 - pd * pd).sqrt(), (1.0 - ps * ps).sqrt());
        let mut zd: f64 = rng.sample(StandardNormal);
        let mut zs: f64 = rng.sample(StandardNormal);
        let mut out = Vec::new();
        let (Some(mut date), Some(end)) = (
            NaiveDate::from_ymd_opt(*years.start(), 1, 1),
            NaiveDate::from_ymd_opt(*years.end(), 12, 31),
        ) else {
            return out;
        };
        while date <= end {
            let e: f64 = rng.sample(StandardNormal);
            zd = pd * zd + id * e;
            let mut slots = [0.0; SLOTS_PER_DAY];
            for v in slots.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                zs = ps * zs + is * e;
                *v = zs;
            }
            if !(date.month() == 2 && date.day() == 29) {
                out.push(Weather { date, day: zd, slots });
            }
            date = date.succ_opt().expect("date in range");
        }
        out
    }

    fn shape(c: &SeasonClimate, h: usize) -> f64 {
        1.0 + c.diurnal * (2.0 * PI * (h as f64 - c.peak_slot) / SLOTS_PER_DAY as f64).cos()
    }

    fn lognormal(sigma: f64, z: f64) -> f64 {
        (sigma * z - 0.5 * sigma * sigma).exp()
    }

    /// Aggregate wind power in MW.
    pub fn power(&self, years: RangeInclusive<i32>) -> Result<HalfHourlySeries> {
        self.validate()?;
        let days = self
            .weather(&years)
            .into_iter()
            .map(|w| {
                let c = self.climate(Season::of_date(w.date));
                let level = c.level * Self::lognormal(self.day_sigma, w.day);
                let mut values = [0.0; SLOTS_PER_DAY];
                for (h, v) in values.iter_mut().enumerate() {
                    let cf = level * Self::shape(c, h) * Self::lognormal(c.sigma, w.slots[h]);
                    *v = self.capacity_mw * cf.clamp(self.floor, self.ceiling);
                }
                SeriesDay { date: w.date, values }
            })
            .collect();
        HalfHourlySeries::from_days(SeriesMode::Power, self.offset()?, days)
    }

    /// Hub-height wind speed in m/s.
    pub fn speed(&self, years: RangeInclusive<i32>) -> Result<HalfHourlySeries> {
        self.validate()?;
        let days = self
            .weather(&years)
            .into_iter()
            .map(|w| {
                let c = self.climate(Season::of_date(w.date));
                let level = c.speed * Self::lognormal(0.5 * self.day_sigma, w.day);
                let mut values = [0.0; SLOTS_PER_DAY];
                for (h, v) in values.iter_mut().enumerate() {
                    let ws = level * (1.0 + 0.5 * (Self::shape(c, h) - 1.0)) * Self::lognormal(c.sigma, w.slots[h]);
                    *v = ws.clamp(0.0, 40.0);
                }
                SeriesDay { date: w.date, values }
            })
            .collect();
        HalfHourlySeries::from_days(SeriesMode::Speed, self.offset()?, days)
    }
}

/// Renders a series as a `timestamp,value` CSV.
pub fn series_to_csv(series: &HalfHourlySeries) -> String {
    let mut out = String::with_capacity(series.len() * 32);
    out.push_str("timestamp,value\n");
    let off = series.offset();
    for day in series.days() {
        for (k, v) in day.values.iter().enumerate() {
            let t = day
                .date
                .and_hms_opt((k / 2) as u32, (30 * (k % 2)) as u32, 0)
                .expect("valid slot time")
                .and_local_timezone(off)
                .single()
                .expect("fixed offset");
            out.push_str(&format!("{},{v:.4}\n", t.format("%Y-%m-%dT%H:%M:%S%:z")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_wind_series_str;

    #[test]
    fn same_seed_same_series() {
        let g = WindSynth::default();
        assert_eq!(g.power(2008..=2008).unwrap(), g.power(2008..=2008).unwrap());
        let other = WindSynth { seed: 8, ..g.clone() };
        assert_ne!(g.power(2008..=2008).unwrap(), other.power(2008..=2008).unwrap());
    }

    #[test]
    fn leap_day_skipped_and_bounds_held() {
        let g = WindSynth::default();
        let p = g.power(2008..=2008).unwrap();
        assert_eq!(p.days().len(), 365);
        let (lo, hi) = (g.floor * g.capacity_mw, g.ceiling * g.capacity_mw);
        assert!(p.values().all(|v| v >= lo - 1e-9 && v <= hi + 1e-9));
    }

    #[test]
    fn csv_round_trip() {
        let g = WindSynth::default();
        let p = g.power(2009..=2009).unwrap();
        let (back, report) = parse_wind_series_str(&series_to_csv(&p), SeriesMode::Power).unwrap();
        assert!(report.is_clean());
        assert_eq!(back.len(), p.len());
        for (a, b) in back.values().zip(p.values()) {
            assert!((a - b).abs() <= 5e-5);
        }
    }
}
