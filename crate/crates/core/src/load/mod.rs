//! Seasonal system demand composed from residential, commercial and
//! industrial components.

mod shapes;

pub use shapes::{
    parse_load_ratios, parse_load_ratios_str, parse_shapes, parse_shapes_str, LoadRatioSet, SectorShape, ShapeSet,
};

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::ingest::{MonthlyEnergyTable, Sector};
use crate::{Error, Period, Result, Season, SLOTS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorEnergy {
    pub sector: Sector,
    pub season: Season,
    /// Average daily energy in MWh.
    pub daily_mwh: f64,
}

impl SectorEnergy {
    pub fn new(sector: Sector, season: Season, daily_mwh: f64) -> Result<Self> {
        if !(daily_mwh > 0.0 && daily_mwh.is_finite()) {
            return Err(Error::Degenerate(format!("{sector} {season} daily energy must be positive, got {daily_mwh}")));
        }
        Ok(SectorEnergy { sector, season, daily_mwh })
    }

    pub fn from_table(table: &MonthlyEnergyTable, sector: Sector, season: Season, years: RangeInclusive<i32>) -> Result<Self> {
        SectorEnergy::new(sector, season, table.seasonal_daily_energy(sector, season, years)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalLoadProfile {
    pub period: Period,
    /// Demand as percent of the daily peak.
    pub percent: Vec<f64>,
    pub peak_mw: f64,
    pub residential_mw: Vec<f64>,
    pub commercial_mw: Vec<f64>,
    pub industrial_mw: Vec<f64>,
}

impl SeasonalLoadProfile {
    pub fn total_mw(&self, h: usize) -> f64 {
        self.residential_mw[h] + self.commercial_mw[h] + self.industrial_mw[h]
    }

    /// 0-based slot of the daily peak (first on ties).
    pub fn peak_slot(&self) -> usize {
        let mut best = 0;
        for h in 1..self.percent.len() {
            if self.percent[h] > self.percent[best] {
                best = h;
            }
        }
        best
    }
}

/// Spreads daily energy over a shape: `MW_h = shape_h * energy / area`.
pub fn scale_sector(shape: &SectorShape, energy: &SectorEnergy) -> Result<Vec<f64>> {
    if shape.sector != energy.sector || shape.season != energy.season {
        return Err(Error::Argument(format!(
            "shape is {} {} but energy is {} {}",
            shape.sector, shape.season, energy.sector, energy.season
        )));
    }
    let area = shape.integral_hours();
    if !(area > 0.0) {
        return Err(Error::Degenerate(format!("{} {} shape has zero area", shape.sector, shape.season)));
    }
    Ok(shape.values.iter().map(|v| v * energy.daily_mwh / area).collect())
}

pub fn scale_residential(shape: &SectorShape, energy: &SectorEnergy) -> Result<Vec<f64>> {
    if shape.sector != Sector::Residential {
        return Err(Error::Argument(format!("expected a residential shape, got {}", shape.sector)));
    }
    scale_sector(shape, energy)
}

/// Summer commercial and industrial MW curves.
pub fn scale_summer_ci(
    c_shape: &SectorShape,
    i_shape: &SectorShape,
    c_energy: &SectorEnergy,
    i_energy: &SectorEnergy,
) -> Result<(Vec<f64>, Vec<f64>)> {
    for (s, sector) in [(c_shape, Sector::Commercial), (i_shape, Sector::Industrial)] {
        if s.sector != sector || s.season != Season::Summer {
            return Err(Error::Argument(format!("expected a summer {sector} shape, got {} {}", s.sector, s.season)));
        }
    }
    Ok((scale_sector(c_shape, c_energy)?, scale_sector(i_shape, i_energy)?))
}

/// Carries summer commercial/industrial curves to every season by
/// `(1 + LR_s) / (1 + LR_summer)`.
pub fn extend_ci_seasons(cl1: &[f64], il1: &[f64], ratios: &LoadRatioSet) -> Result<BTreeMap<Season, (Vec<f64>, Vec<f64>)>> {
    ratios.validate()?;
    let base = 1.0 + ratios.summer;
    Ok(Season::ALL
        .iter()
        .map(|&s| {
            let f = (1.0 + ratios.get(s)) / base;
            (s, (cl1.iter().map(|v| v * f).collect(), il1.iter().map(|v| v * f).collect()))
        })
        .collect())
}

/// Sums the components and expresses the total as percent of its peak.
pub fn compose_system_load(period: Period, rl: Vec<f64>, cl: Vec<f64>, il: Vec<f64>) -> Result<SeasonalLoadProfile> {
    if rl.len() != SLOTS_PER_DAY || cl.len() != SLOTS_PER_DAY || il.len() != SLOTS_PER_DAY {
        return Err(Error::Argument("load components need 48 slots each".into()));
    }
    let total: Vec<f64> = (0..SLOTS_PER_DAY).map(|h| rl[h] + cl[h] + il[h]).collect();
    let peak = total.iter().cloned().fold(f64::MIN, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Degenerate(format!("{} load components are all zero", period.name())));
    }
    let percent = total
        .iter()
        .map(|&t| if t == peak { 100.0 } else { 100.0 * t / peak })
        .collect();
    Ok(SeasonalLoadProfile {
        period,
        percent,
        peak_mw: peak,
        residential_mw: rl,
        commercial_mw: cl,
        industrial_mw: il,
    })
}

/// Builds the four seasonal profiles from bundled-format inputs.
pub fn build_load_profiles(
    table: &MonthlyEnergyTable,
    shapes: &ShapeSet,
    ratios: &LoadRatioSet,
    years: RangeInclusive<i32>,
) -> Result<Vec<SeasonalLoadProfile>> {
    let energy = |sector, season| SectorEnergy::from_table(table, sector, season, years.clone());
    let (cl1, il1) = scale_summer_ci(
        shapes.get(Sector::Commercial, Season::Summer)?,
        shapes.get(Sector::Industrial, Season::Summer)?,
        &energy(Sector::Commercial, Season::Summer)?,
        &energy(Sector::Industrial, Season::Summer)?,
    )?;
    let mut ci = extend_ci_seasons(&cl1, &il1, ratios)?;
    Season::ALL
        .iter()
        .map(|&s| {
            let rl = scale_residential(shapes.get(Sector::Residential, s)?, &energy(Sector::Residential, s)?)?;
            let (cl, il) = ci.remove(&s).expect("all seasons extended");
            compose_system_load(s.into(), rl, cl, il)
        })
        .collect()
}

/// Year-round profile: per-slot component MW averaged over the seasons,
/// then composed as usual.
pub fn annual_load_profile(seasonal: &[SeasonalLoadProfile]) -> Result<SeasonalLoadProfile> {
    if seasonal.is_empty() {
        return Err(Error::EmptyInput("no seasonal load profiles".into()));
    }
    let n = seasonal.len() as f64;
    let avg = |f: fn(&SeasonalLoadProfile) -> &Vec<f64>| -> Vec<f64> {
        (0..SLOTS_PER_DAY).map(|h| seasonal.iter().map(|p| f(p)[h]).sum::<f64>() / n).collect()
    };
    compose_system_load(
        Period::Annual,
        avg(|p| &p.residential_mw),
        avg(|p| &p.commercial_mw),
        avg(|p| &p.industrial_mw),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shape(sector: Sector, season: Season, f: impl Fn(usize) -> f64) -> SectorShape {
        SectorShape::normalized(sector, season, (0..48).map(f).collect()).unwrap()
    }

    #[test]
    fn flat_residential() {
        let s = shape(Sector::Residential, Season::Winter, |_| 1.0);
        let e = SectorEnergy::new(Sector::Residential, Season::Winter, 240.0).unwrap();
        assert_eq!(s.integral_hours(), 24.0);
        assert_eq!(scale_residential(&s, &e).unwrap(), vec![10.0; 48]);
    }

    #[test]
    fn half_area_shape_peaks_at_ten() {
        let mut v = vec![23.0 / 47.0; 48];
        v[20] = 1.0;
        let s = SectorShape::new(Sector::Residential, Season::Summer, v).unwrap();
        assert!((s.integral_hours() - 12.0).abs() < 1e-12);
        let e = SectorEnergy::new(Sector::Residential, Season::Summer, 120.0).unwrap();
        let mw = scale_residential(&s, &e).unwrap();
        assert!((mw[20] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn flat_commercial_and_symmetric_industrial() {
        let c = shape(Sector::Commercial, Season::Summer, |_| 1.0);
        let i = shape(Sector::Industrial, Season::Summer, |_| 1.0);
        let ce = SectorEnergy::new(Sector::Commercial, Season::Summer, 480.0).unwrap();
        let ie = SectorEnergy::new(Sector::Industrial, Season::Summer, 480.0).unwrap();
        let (cl, il) = scale_summer_ci(&c, &i, &ce, &ie).unwrap();
        assert_eq!(cl, vec![20.0; 48]);
        assert_eq!(cl, il);
    }

    #[test]
    fn winter_ratio_scaling() {
        let r = LoadRatioSet {
            winter: 0.5,
            ..LoadRatioSet::default()
        };
        let out = extend_ci_seasons(&[12.0; 48], &[12.0; 48], &r).unwrap();
        assert!((out[&Season::Winter].0[0] - 15.0).abs() < 1e-12);
        assert_eq!(out[&Season::Summer].0[0], 12.0);
        let same = extend_ci_seasons(&[3.0; 48], &[4.0; 48], &LoadRatioSet::default()).unwrap();
        assert!(same.values().all(|(c, i)| c[0] == 3.0 && i[0] == 4.0));
    }

    #[test]
    fn compose_peaks_at_hundred() {
        let rl: Vec<f64> = (0..48).map(|h| 1.0 + (h as f64 * 0.2).sin()).collect();
        let p = compose_system_load(Period::Summer, rl, vec![2.0; 48], vec![0.5; 48]).unwrap();
        assert_eq!(p.percent[p.peak_slot()], 100.0);
        for h in 0..48 {
            assert!((p.percent[h] - 100.0 * p.total_mw(h) / p.peak_mw).abs() < 1e-12);
        }
        assert!(matches!(
            compose_system_load(Period::Fall, vec![0.0; 48], vec![0.0; 48], vec![0.0; 48]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_area_is_degenerate() {
        assert!(SectorShape::normalized(Sector::Residential, Season::Fall, vec![0.0; 48]).is_err());
    }

    proptest! {
        #[test]
        fn energy_identity(values in proptest::collection::vec(0.01f64..1.0, 48), mwh in 1.0f64..1e6) {
            let s = SectorShape::normalized(Sector::Commercial, Season::Summer, values).unwrap();
            let e = SectorEnergy::new(Sector::Commercial, Season::Summer, mwh).unwrap();
            let mw = scale_sector(&s, &e).unwrap();
            let total: f64 = mw.iter().map(|v| v * 0.5).sum();
            prop_assert!((total - mwh).abs() <= 1e-9 * mwh);
        }

        #[test]
        fn common_energy_scaling_keeps_percentages(
            r in proptest::collection::vec(0.01f64..1.0, 48),
            c in proptest::collection::vec(0.01f64..1.0, 48),
            k in 0.1f64..10.0,
        ) {
            let i = vec![0.3; 48];
            let a = compose_system_load(Period::Winter, r.clone(), c.clone(), i.clone()).unwrap();
            let scale = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
            let b = compose_system_load(Period::Winter, scale(&r), scale(&c), scale(&i)).unwrap();
            prop_assert!((b.peak_mw - k * a.peak_mw).abs() <= 1e-9 * b.peak_mw);
            for h in 0..48 {
                prop_assert!((a.percent[h] - b.percent[h]).abs() < 1e-9);
            }
        }
    }
}
