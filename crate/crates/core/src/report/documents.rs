//! Versioned JSON documents and plot tables.

use serde::{Deserialize, Serialize};

use super::io::table_bytes;
use crate::grid::{DispatchSchedule, PfSolution};
use crate::load::SeasonalLoadProfile;
use crate::scan::{ComparisonRow, Criterion, Mode, ScaleFactorTable, VulnerabilityRanking, ViolationReport};
use crate::wind::{AnnualProfile, NormativeDayProfile, OutlierReport, TurbineCurve};
use crate::{Error, Result, Season, SLOTS_PER_DAY};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindProfileDocument {
    pub version: u32,
    pub profile: NormativeDayProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualProfileDocument {
    pub version: u32,
    pub turbine: TurbineCurve,
    pub training_years: (i32, i32),
    pub profile: AnnualProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfileDocument {
    pub version: u32,
    pub training_years: (i32, i32),
    pub profile: SeasonalLoadProfile,
}

pub(crate) fn check_version(found: u32, what: &str) -> Result<()> {
    if found != DOCUMENT_VERSION {
        return Err(Error::Structure(format!(
            "{what} document version {found} is not supported (expected {DOCUMENT_VERSION})"
        )));
    }
    Ok(())
}

fn f(v: f64) -> String {
    format!("{v}")
}

/// Normative day with its envelope: `slot,normp,lower,upper`.
pub fn envelope_csv(p: &NormativeDayProfile) -> Result<Vec<u8>> {
    let header = ["slot", "normp", "lower", "upper"].map(String::from);
    table_bytes(
        &header,
        (0..SLOTS_PER_DAY).map(|h| vec![(h + 1).to_string(), f(p.slots[h].normp), f(p.lower(h)), f(p.upper(h))]),
    )
}

/// Per-season series side by side: `slot,winter,spring,summer,fall`.
pub fn seasonal_table(series: &[(Season, Vec<f64>)]) -> Result<Vec<u8>> {
    let mut header = vec!["slot".to_string()];
    header.extend(series.iter().map(|(s, _)| s.name().to_string()));
    table_bytes(
        &header,
        (0..SLOTS_PER_DAY).map(|h| {
            let mut row = vec![(h + 1).to_string()];
            row.extend(series.iter().map(|(_, v)| f(v[h])));
            row
        }),
    )
}

pub fn actual_mean_csv(profiles: &[NormativeDayProfile]) -> Result<Vec<u8>> {
    let series: Vec<_> = profiles.iter().map(|p| (p.season, p.actual.slot_mean_mw.clone())).collect();
    seasonal_table(&series)
}

pub fn load_percent_csv(profiles: &[SeasonalLoadProfile]) -> Result<Vec<u8>> {
    seasonal_table(&seasonal_only(profiles, |p| p.percent.clone()))
}

pub fn load_mw_csv(profiles: &[SeasonalLoadProfile]) -> Result<Vec<u8>> {
    seasonal_table(&seasonal_only(profiles, |p| (0..SLOTS_PER_DAY).map(|h| p.total_mw(h)).collect()))
}

fn seasonal_only(profiles: &[SeasonalLoadProfile], f: impl Fn(&SeasonalLoadProfile) -> Vec<f64>) -> Vec<(Season, Vec<f64>)> {
    profiles
        .iter()
        .filter_map(|p| p.period.season().map(|s| (s, f(p))))
        .collect()
}

#[derive(Serialize)]
struct OutlierRow<'a> {
    season: Season,
    date: chrono::NaiveDate,
    slot: usize,
    value: f64,
    bound: f64,
    kind: &'a crate::wind::BoundKind,
}

pub fn outliers_csv(r: &OutlierReport) -> Result<Vec<u8>> {
    super::io::csv_bytes(r.records.iter().map(|x| OutlierRow {
        season: r.season,
        date: x.date,
        slot: x.slot,
        value: x.value,
        bound: x.bound,
        kind: &x.kind,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSummaryRow {
    pub season: Season,
    pub tested: usize,
    pub outliers: usize,
    pub percentage: f64,
}

pub fn outlier_summary(reports: &[OutlierReport]) -> Vec<OutlierSummaryRow> {
    reports
        .iter()
        .map(|r| OutlierSummaryRow {
            season: r.season,
            tested: r.tested_slots,
            outliers: r.outliers,
            percentage: r.percentage,
        })
        .collect()
}

/// `slot,bus,vm,va` with angles in radians.
pub fn voltages_csv(buses: &[u32], solutions: &[(usize, &PfSolution)]) -> Result<Vec<u8>> {
    let header = ["slot", "bus", "vm", "va"].map(String::from);
    let mut rows = Vec::new();
    for (slot, s) in solutions {
        for (i, bus) in buses.iter().enumerate() {
            rows.push(vec![slot.to_string(), bus.to_string(), f(s.vm[i]), f(s.va[i])]);
        }
    }
    table_bytes(&header, rows)
}

/// `slot,gen,pg,qg`; generators are numbered from 1 in case order.
pub fn dispatch_csv(schedule: &DispatchSchedule) -> Result<Vec<u8>> {
    let header = ["slot", "gen", "pg", "qg"].map(String::from);
    let mut rows = Vec::new();
    for (h, d) in schedule.slots.iter().enumerate() {
        for (g, (p, q)) in d.solution.pg.iter().zip(&d.solution.qg).enumerate() {
            rows.push(vec![(h + 1).to_string(), (g + 1).to_string(), f(*p), f(*q)]);
        }
    }
    table_bytes(&header, rows)
}

pub fn factors_csv(t: &ScaleFactorTable) -> Result<Vec<u8>> {
    let header = ["period", "mode", "slot", "factor"].map(String::from);
    let mut rows = Vec::new();
    for r in &t.rows {
        for (h, v) in r.factors.iter().enumerate() {
            rows.push(vec![r.period.name().to_string(), r.mode.name().to_string(), (h + 1).to_string(), f(*v)]);
        }
    }
    table_bytes(&header, rows)
}

pub fn violation_csv(r: &ViolationReport) -> Result<Vec<u8>> {
    super::io::csv_bytes(r.rows())
}

pub fn ranking_csv(r: &VulnerabilityRanking) -> Result<Vec<u8>> {
    let header = ["rank", "bus", "wv", "alpha1", "pv1", "alpha2", "pv2", "group"].map(String::from);
    let opt = |a: Option<usize>| a.map(|x| x.to_string()).unwrap_or_default();
    table_bytes(
        &header,
        r.entries.iter().map(|e| {
            vec![
                e.rank.to_string(),
                e.bus.to_string(),
                f(e.wv),
                opt(e.alpha1),
                f(e.pv1),
                opt(e.alpha2),
                f(e.pv2),
                e.group.name().to_string(),
            ]
        }),
    )
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<Vec<u8>> {
    super::io::csv_bytes(rows)
}

/// Annual absolute-band violation percentage per bus: the min and max modes
/// pooled over the four seasons, or the annual mean-mode count for a
/// season-independent report.
pub fn annual_violation_percent(r: &ViolationReport) -> Result<Vec<(u32, f64)>> {
    let mut counts = vec![0usize; r.buses.len()];
    let mut total = 0usize;
    for t in r.tallies.iter().filter(|t| t.criterion == Criterion::Absolute) {
        let take = match t.period.season() {
            Some(_) => t.mode != Mode::Mean,
            None => true,
        };
        if take {
            total += t.total;
            for (c, x) in counts.iter_mut().zip(&t.counts) {
                *c += x;
            }
        }
    }
    if total == 0 {
        return Err(Error::Argument("report has no absolute-band cases".into()));
    }
    Ok(r.buses
        .iter()
        .zip(counts)
        .map(|(&b, c)| (b, 100.0 * c as f64 / total as f64))
        .collect())
}

pub fn annual_violation_csv(r: &ViolationReport) -> Result<Vec<u8>> {
    let header = ["bus", "percent"].map(String::from);
    table_bytes(
        &header,
        annual_violation_percent(r)?
            .into_iter()
            .map(|(b, p)| vec![b.to_string(), f(p)]),
    )
}
