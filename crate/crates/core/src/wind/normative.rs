use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{closest_to, deviation_extremes, mean, NormalizedDay, NormalizedDayMatrix};
use crate::{Error, Execution, Result, Season, SLOTS_PER_DAY};

/// One seasonal slot `j = day * 48 + h` of a normative season.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonSlot {
    /// Mean over training years.
    pub mean: f64,
    /// The per-year value closest to the mean.
    pub representative: f64,
    /// Training year the representative came from.
    pub year: i32,
    /// Magnitude of the most negative deviation from the mean, >= 0.
    pub min_dev: f64,
    /// Largest positive deviation from the mean, >= 0.
    pub max_dev: f64,
}

/// Actual-scale (MW) statistics over the training days of a season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualStats {
    pub mean_mw: f64,
    pub max_mw: f64,
    pub min_mw: f64,
    /// Mean MW at each half-hour of the day.
    pub slot_mean_mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormativeSeason {
    pub season: Season,
    pub years: Vec<i32>,
    /// Day-of-season indices present in every training year, ascending.
    pub day_indices: Vec<usize>,
    /// `day_indices.len() * 48` slots.
    pub slots: Vec<SeasonSlot>,
    pub actual: ActualStats,
}

impl NormativeSeason {
    pub fn n_days(&self) -> usize {
        self.day_indices.len()
    }
}

/// Builds the normative season from per-year normalized days.
///
/// Years are aligned on day-of-season index; only indices present in every
/// year are kept. Ties in representative selection go to the lowest year.
pub fn build_normative_season(
    by_year: &BTreeMap<i32, NormalizedDayMatrix>,
    season: Season,
) -> Result<NormativeSeason> {
    if by_year.len() < 2 {
        return Err(Error::InsufficientData {
            what: "normative season training years",
            needed: 2,
            got: by_year.len(),
        });
    }
    let mut per_year: Vec<(i32, BTreeMap<usize, &NormalizedDay>)> = Vec::new();
    for (&year, matrix) in by_year {
        let days: BTreeMap<usize, &NormalizedDay> = matrix.season_days(season).collect();
        if days.is_empty() {
            return Err(Error::Coverage(format!("{season} missing in training year {year}")));
        }
        per_year.push((year, days));
    }
    let mut common: BTreeSet<usize> = per_year[0].1.keys().copied().collect();
    for (_, days) in &per_year[1..] {
        common.retain(|i| days.contains_key(i));
    }
    if common.is_empty() {
        return Err(Error::Coverage(format!("{season} days do not overlap across training years")));
    }
    let day_indices: Vec<usize> = common.into_iter().collect();

    let years: Vec<i32> = per_year.iter().map(|(y, _)| *y).collect();
    let mut slots = Vec::with_capacity(day_indices.len() * SLOTS_PER_DAY);
    let mut values = vec![0.0; years.len()];
    for &d in &day_indices {
        for h in 0..SLOTS_PER_DAY {
            for (k, (_, days)) in per_year.iter().enumerate() {
                values[k] = days[&d].values[h];
            }
            let m = mean(&values);
            let rep = closest_to(&values, m);
            let (_, min_dev, _, max_dev) = deviation_extremes(&values, m);
            slots.push(SeasonSlot {
                mean: m,
                representative: values[rep],
                year: years[rep],
                min_dev,
                max_dev,
            });
        }
    }

    let mut total = 0.0;
    let (mut max_mw, mut min_mw) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut slot_sum = vec![0.0; SLOTS_PER_DAY];
    let count = (per_year.len() * day_indices.len()) as f64;
    for (_, days) in &per_year {
        for d in &day_indices {
            let day = days[d];
            for (h, acc) in slot_sum.iter_mut().enumerate() {
                let mw = day.actual_mw(h);
                *acc += mw;
                total += mw;
                max_mw = max_mw.max(mw);
                min_mw = min_mw.min(mw);
            }
        }
    }
    let actual = ActualStats {
        mean_mw: total / (count * SLOTS_PER_DAY as f64),
        max_mw,
        min_mw,
        slot_mean_mw: slot_sum.into_iter().map(|s| s / count).collect(),
    };

    Ok(NormativeSeason {
        season,
        years,
        day_indices,
        slots,
        actual,
    })
}

/// One half-hour of a normative day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSlot {
    /// Mean over the season's days of the seasonal representatives.
    pub mean: f64,
    /// The day value closest to the mean.
    pub normp: f64,
    pub minvp: f64,
    pub maxvp: f64,
    /// `minvp` plus the season-level min deviation on the day attaining it.
    pub netminv: f64,
    /// `maxvp` plus the season-level max deviation on the day attaining it.
    pub netmaxv: f64,
    /// Day-of-season index of the representative.
    pub chosen_day: usize,
    pub min_day: usize,
    pub max_day: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormativeDayProfile {
    pub season: Season,
    pub training_years: Vec<i32>,
    pub n_days: usize,
    pub slots: Vec<ProfileSlot>,
    pub actual: ActualStats,
}

impl NormativeDayProfile {
    pub fn lower(&self, h: usize) -> f64 {
        self.slots[h].normp - self.slots[h].netminv
    }

    pub fn upper(&self, h: usize) -> f64 {
        self.slots[h].normp + self.slots[h].netmaxv
    }

    /// Mean over the day of the envelope width.
    pub fn mean_envelope_width(&self) -> f64 {
        self.slots.iter().map(|s| s.netminv + s.netmaxv).sum::<f64>() / self.slots.len() as f64
    }
}

/// Collapses a normative season into its normative day.
pub fn build_normative_day(ns: &NormativeSeason) -> NormativeDayProfile {
    let n = ns.n_days();
    let mut slots = Vec::with_capacity(SLOTS_PER_DAY);
    let mut values = vec![0.0; n];
    for h in 0..SLOTS_PER_DAY {
        for (d, v) in values.iter_mut().enumerate() {
            *v = ns.slots[d * SLOTS_PER_DAY + h].representative;
        }
        let m = mean(&values);
        let chosen = closest_to(&values, m);
        let (dmin, minvp, dmax, maxvp) = deviation_extremes(&values, m);
        slots.push(ProfileSlot {
            mean: m,
            normp: values[chosen],
            minvp,
            maxvp,
            netminv: minvp + ns.slots[dmin * SLOTS_PER_DAY + h].min_dev,
            netmaxv: maxvp + ns.slots[dmax * SLOTS_PER_DAY + h].max_dev,
            chosen_day: ns.day_indices[chosen],
            min_day: ns.day_indices[dmin],
            max_day: ns.day_indices[dmax],
        });
    }
    NormativeDayProfile {
        season: ns.season,
        training_years: ns.years.clone(),
        n_days: n,
        slots,
        actual: ns.actual.clone(),
    }
}

/// Builds all four normative-day profiles from normalized training days.
pub fn build_profiles(
    training: &NormalizedDayMatrix,
    exec: Execution,
) -> Result<Vec<NormativeDayProfile>> {
    let by_year = training.by_year();
    exec.map(&Season::ALL, |&s| {
        build_normative_season(&by_year, s).map(|ns| build_normative_day(&ns))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    /// Training data where day `d` of year `y` in summer has slot values
    /// `f(y, d, h)`.
    fn training(years: &[i32], n_days: usize, f: impl Fn(i32, usize, usize) -> f64) -> BTreeMap<i32, NormalizedDayMatrix> {
        let mut out = BTreeMap::new();
        for &y in years {
            let mut m = NormalizedDayMatrix::default();
            for d in 0..n_days {
                let mut values = [0.0; SLOTS_PER_DAY];
                for (h, v) in values.iter_mut().enumerate() {
                    *v = f(y, d, h);
                }
                m.days.push(NormalizedDay {
                    date: NaiveDate::from_ymd_opt(y, 6, 1 + d as u32).unwrap(),
                    values,
                    reference_mw: 10.0,
                });
            }
            out.insert(y, m);
        }
        out
    }

    #[test]
    fn identical_years_have_zero_spread() {
        let t = training(&[2007, 2008, 2009, 2010, 2011], 3, |_, d, h| 1.0 + 0.1 * d as f64 + 0.01 * h as f64);
        let ns = build_normative_season(&t, Season::Summer).unwrap();
        assert_eq!(ns.n_days(), 3);
        for (j, s) in ns.slots.iter().enumerate() {
            let (d, h) = (j / SLOTS_PER_DAY, j % SLOTS_PER_DAY);
            assert!((s.representative - (1.0 + 0.1 * d as f64 + 0.01 * h as f64)).abs() < 1e-15);
            assert_eq!((s.min_dev, s.max_dev), (0.0, 0.0));
            assert_eq!(s.year, 2007);
        }
    }

    #[test]
    fn two_point_tie_goes_to_first_year() {
        let t = training(&[2007, 2008], 1, |y, _, _| if y == 2007 { 2.0 } else { 4.0 });
        let ns = build_normative_season(&t, Season::Summer).unwrap();
        let s = ns.slots[5];
        assert_eq!((s.mean, s.representative, s.year), (3.0, 2.0, 2007));
        assert_eq!((s.min_dev, s.max_dev), (1.0, 1.0));
    }

    #[test]
    fn three_point_selection() {
        let t = training(&[2007, 2008, 2009], 1, |y, _, _| match y {
            2007 => 1.0,
            2008 => 3.0,
            _ => 8.0,
        });
        let s = build_normative_season(&t, Season::Summer).unwrap().slots[0];
        assert_eq!((s.mean, s.representative, s.year), (4.0, 3.0, 2008));
        assert_eq!((s.min_dev, s.max_dev), (3.0, 4.0));
    }

    #[test]
    fn errors_on_single_year_or_missing_season() {
        let t = training(&[2007], 2, |_, _, _| 1.0);
        assert!(matches!(
            build_normative_season(&t, Season::Summer),
            Err(Error::InsufficientData { .. })
        ));
        let t = training(&[2007, 2008], 2, |_, _, _| 1.0);
        assert!(matches!(build_normative_season(&t, Season::Winter), Err(Error::Coverage(_))));
    }

    #[test]
    fn identical_days_isolate_season_term() {
        // Every day identical within a year, but years differ: the day-level
        // spread is zero so the envelope equals the season-level deviation.
        let t = training(&[2007, 2008, 2009], 4, |y, _, h| 1.0 + 0.1 * (y - 2007) as f64 + 0.001 * h as f64);
        let ns = build_normative_season(&t, Season::Summer).unwrap();
        let p = build_normative_day(&ns);
        for (h, s) in p.slots.iter().enumerate() {
            assert!((s.normp - (1.1 + 0.001 * h as f64)).abs() < 1e-12);
            assert_eq!((s.minvp, s.maxvp), (0.0, 0.0));
            assert_eq!(s.chosen_day, 0);
            assert!((s.netminv - ns.slots[h].min_dev).abs() < 1e-15);
            assert!((s.netmaxv - ns.slots[h].max_dev).abs() < 1e-15);
            assert!((s.netminv - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn two_day_envelope_hand_evaluated() {
        // Day representatives 0.5 and 1.5 at every slot; the season-level
        // min deviation on day 0 is 0.1.
        let slot = |representative, min_dev| SeasonSlot {
            mean: representative,
            representative,
            year: 2007,
            min_dev,
            max_dev: 0.0,
        };
        let mut slots = vec![slot(0.5, 0.1); SLOTS_PER_DAY];
        slots.extend(vec![slot(1.5, 0.0); SLOTS_PER_DAY]);
        let ns = NormativeSeason {
            season: Season::Summer,
            years: vec![2007, 2008],
            day_indices: vec![0, 1],
            slots,
            actual: ActualStats {
                mean_mw: 1.0,
                max_mw: 1.0,
                min_mw: 1.0,
                slot_mean_mw: vec![1.0; SLOTS_PER_DAY],
            },
        };
        let s = build_normative_day(&ns).slots[7];
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.normp, 0.5);
        assert_eq!(s.minvp, 0.5);
        assert!((s.netminv - 0.6).abs() < 1e-15);
        assert_eq!((s.chosen_day, s.min_day, s.max_day), (0, 0, 1));
    }

    #[test]
    fn single_day_two_identical_years_reproduce_the_day() {
        let t = training(&[2010, 2011], 1, |_, _, h| 1.0 + (h as f64 * 0.3).sin());
        let p = build_normative_day(&build_normative_season(&t, Season::Summer).unwrap());
        for (h, s) in p.slots.iter().enumerate() {
            assert_eq!(s.normp, 1.0 + (h as f64 * 0.3).sin());
            assert_eq!((s.netminv, s.netmaxv), (0.0, 0.0));
        }
    }

    #[test]
    fn actual_stats_use_reference_scale() {
        let t = training(&[2007, 2008], 2, |y, _, h| if h == 0 { 1.0 } else { (y - 2006) as f64 });
        let ns = build_normative_season(&t, Season::Summer).unwrap();
        assert_eq!(ns.actual.max_mw, 20.0);
        assert_eq!(ns.actual.min_mw, 10.0);
        assert_eq!(ns.actual.slot_mean_mw[0], 10.0);
        assert_eq!(ns.actual.slot_mean_mw[1], 15.0);
    }

    proptest! {
        #[test]
        fn representative_within_year_range_and_envelopes_ordered(
            data in proptest::collection::vec(0.0f64..5.0, 4 * 3 * SLOTS_PER_DAY)
        ) {
            let t = training(&[2007, 2008, 2009, 2010], 3, |y, d, h| {
                data[((y - 2007) as usize * 3 + d) * SLOTS_PER_DAY + h]
            });
            let ns = build_normative_season(&t, Season::Summer).unwrap();
            for (j, s) in ns.slots.iter().enumerate() {
                let (d, h) = (j / SLOTS_PER_DAY, j % SLOTS_PER_DAY);
                let vals: Vec<f64> = (0..4).map(|y| data[(y * 3 + d) * SLOTS_PER_DAY + h]).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(lo <= s.representative && s.representative <= hi);
                prop_assert!(vals.contains(&s.representative));
                prop_assert!(s.mean - s.min_dev <= s.representative + 1e-12);
                prop_assert!(s.representative <= s.mean + s.max_dev + 1e-12);
            }
            let p = build_normative_day(&ns);
            for (h, s) in p.slots.iter().enumerate() {
                prop_assert!(p.lower(h) <= s.normp && s.normp <= p.upper(h));
                prop_assert!(s.netminv >= s.minvp && s.netmaxv >= s.maxvp);
            }
        }
    }
}
