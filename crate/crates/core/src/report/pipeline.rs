//! The end-to-end stages behind the command-line tool.
//!
//! Every stage reads its configuration plus the outputs of earlier stages
//! (checked against the manifest), writes its own outputs atomically and
//! records them in `out/manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::documents::*;
use super::io::{json_bytes, sha256_hex};
use super::manifest::{PipelineManifest, StageRecord, StageRun};
use super::summary::{render_summary, SummaryInputs};
use crate::grid::{build_dispatch_schedule, DispatchSchedule, LoadAllocation, PfOptions, PowerFlow};
use crate::ingest::{
    import_case, parse_demand_table_str, parse_matpower, parse_wind_series, HalfHourlySeries, NetworkCase, SeriesMode,
};
use crate::load::{annual_load_profile, build_load_profiles, parse_load_ratios_str, parse_shapes_str, LoadRatioSet, SeasonalLoadProfile, ShapeSet};
use crate::scan::{
    compare_approaches, rank_vulnerability, run_scan, Approach, ComparisonRow, Criterion, FactorInputs, Mode,
    ScaleFactorTable, ScanConfig, ScanInputs, ViolationReport, VulnerabilityRanking,
};
use crate::synthetic::WindSynth;
use crate::wind::{build_annual_profile, build_profiles, detect_outliers, normalize_days, NormativeDayProfile, TurbineCurve};
use crate::{Error, Execution, Period, Result, Season};

/// Inputs shipped with the crate.
pub mod bundled {
    pub const CASE118: &str = include_str!("../../data/case118.m");
    pub const DEMAND: &str = include_str!("../../data/demand.csv");
    pub const SHAPES: &str = include_str!("../../data/shapes.csv");
    pub const LOAD_RATIOS: &str = include_str!("../../data/load_ratios.csv");
}

pub const STAGE_BUILD_WIND: &str = "build-wind";
pub const STAGE_VALIDATE_WIND: &str = "validate-wind";
pub const STAGE_BUILD_LOAD: &str = "build-load";
pub const STAGE_SCAN: &str = "scan";
pub const STAGE_REPORT: &str = "report";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    /// Half-hourly aggregate power CSV. The seeded generator stands in when absent.
    pub power: Option<PathBuf>,
    /// Half-hourly speed CSV for the annual profile.
    pub speed: Option<PathBuf>,
    pub training_years: (i32, i32),
    pub test_years: (i32, i32),
    pub turbine: TurbineCurve,
    /// Generator parameters; its seed is replaced by the pipeline seed.
    pub synthetic: WindSynth,
}

impl Default for WindConfig {
    fn default() -> Self {
        WindConfig {
            power: None,
            speed: None,
            training_years: (2007, 2011),
            test_years: (2012, 2015),
            turbine: TurbineCurve::default(),
            synthetic: WindSynth::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadConfig {
    /// Monthly sector energy CSV; bundled table when absent.
    pub demand: Option<PathBuf>,
    /// Shape CSVs merged in order; bundled shapes when empty.
    pub shapes: Vec<PathBuf>,
    /// `season,lr` CSV; bundled ratios when absent.
    pub ratios: Option<PathBuf>,
    pub training_years: (i32, i32),
}

impl Default for LoadConfig {
    fn default() -> Self {
        LoadConfig {
            demand: None,
            shapes: Vec::new(),
            ratios: None,
            training_years: (2007, 2011),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub selections: usize,
    pub penetration: f64,
    pub tolerance: f64,
    pub criteria: Vec<Criterion>,
    pub relative_threshold: f64,
    pub band: (f64, f64),
    /// Modes of the season-focused scan; the season-independent one only has mean.
    pub modes: Vec<Mode>,
    pub approaches: Vec<Approach>,
    pub pf: PfOptions,
    /// MATPOWER or JSON case; the bundled 118-bus case when absent.
    pub case: Option<PathBuf>,
}

impl Default for ScanSection {
    fn default() -> Self {
        let base = ScanConfig::default();
        ScanSection {
            selections: 20,
            penetration: base.penetration,
            tolerance: base.tolerance,
            criteria: base.criteria,
            relative_threshold: base.relative_threshold,
            band: base.band,
            modes: base.modes,
            approaches: vec![Approach::SeasonFocused],
            pf: base.pf,
            case: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// The only source of randomness: wind selections and the synthetic generator.
    pub seed: u64,
    pub wind: WindConfig,
    pub load: LoadConfig,
    pub scan: ScanSection,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            wind: WindConfig::default(),
            load: LoadConfig::default(),
            scan: ScanSection::default(),
            execution: Execution::default(),
        }
    }
}

impl PipelineConfig {
    pub fn scan_config(&self, approach: Approach) -> ScanConfig {
        let s = &self.scan;
        let modes = match approach {
            Approach::SeasonFocused => s.modes.clone(),
            Approach::SeasonIndependent => vec![Mode::Mean],
        };
        ScanConfig {
            selections: s.selections,
            penetration: s.penetration,
            tolerance: s.tolerance,
            seed: self.seed,
            criteria: s.criteria.clone(),
            relative_threshold: s.relative_threshold,
            band: s.band,
            modes,
            approach,
            pf: s.pf,
            execution: self.execution,
        }
    }

    pub fn synth(&self) -> WindSynth {
        WindSynth {
            seed: self.seed,
            ..self.wind.synthetic.clone()
        }
    }

    /// Config snapshot stored in the manifest.
    pub fn snapshot(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

fn years(r: (i32, i32)) -> Result<std::ops::RangeInclusive<i32>> {
    if r.0 > r.1 {
        return Err(Error::Argument(format!("year range {}-{} is reversed", r.0, r.1)));
    }
    Ok(r.0..=r.1)
}

fn stage_err(stage: &str, e: Error) -> Error {
    Error::Stage {
        stage: stage.to_string(),
        source: Box::new(e),
    }
}

fn file_input(run: &mut StageRun, path: &Path) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    run.input(path.display().to_string(), sha256_hex(&bytes));
    Ok(())
}

fn bundled_input(run: &mut StageRun, name: &str, text: &str) {
    run.input(format!("bundled:{name}"), sha256_hex(text.as_bytes()));
}

fn load_series(run: &mut StageRun, path: Option<&Path>, mode: SeriesMode, synth: &WindSynth, span: (i32, i32)) -> Result<HalfHourlySeries> {
    match path {
        Some(p) => {
            file_input(run, p)?;
            let (series, gaps) = parse_wind_series(p, mode)?;
            if !gaps.is_clean() {
                warn!(
                    "{}: {} missing intervals, {} slots repaired, {} days dropped",
                    p.display(),
                    gaps.missing.len(),
                    gaps.repaired_count,
                    gaps.dropped_days.len()
                );
            }
            Ok(series)
        }
        None => {
            run.input(
                format!("synthetic:{mode:?}").to_lowercase(),
                sha256_hex(&json_bytes(synth)?),
            );
            match mode {
                SeriesMode::Power => synth.power(span.0..=span.1),
                SeriesMode::Speed => synth.speed(span.0..=span.1),
            }
        }
    }
}

pub fn wind_profile_path(s: Season) -> String {
    format!("wind/profile_{s}.json")
}

pub const ANNUAL_WIND_PROFILE: &str = "wind/annual_profile.json";

pub fn load_profile_path(p: Period) -> String {
    format!("load/profile_{p}.json")
}

fn report_path(a: Approach, ext: &str) -> String {
    format!("scan/report_{}.{ext}", a.name())
}

#[derive(Debug, Clone)]
pub struct WindOutputs {
    pub profiles: Vec<NormativeDayProfile>,
    pub annual: Option<crate::wind::AnnualProfile>,
    pub record: StageRecord,
}

/// Builds the four normative-day profiles and, when a speed series is
/// available, the annual profile.
pub fn build_wind(cfg: &PipelineConfig, out: &Path) -> Result<WindOutputs> {
    inner_build_wind(cfg, out).map_err(|e| stage_err(STAGE_BUILD_WIND, e))
}

fn inner_build_wind(cfg: &PipelineConfig, out: &Path) -> Result<WindOutputs> {
    let w = &cfg.wind;
    let mut run = StageRun::start(STAGE_BUILD_WIND, out, serde_json::to_value(w)?);
    let synth = cfg.synth();
    let train_years = years(w.training_years)?;
    let power = load_series(&mut run, w.power.as_deref(), SeriesMode::Power, &synth, w.training_years)?;
    let train = normalize_days(&power.filter_years(train_years.clone()))?;
    let profiles = build_profiles(&train, cfg.execution)?;
    for p in &profiles {
        run.write_json(
            &wind_profile_path(p.season),
            &WindProfileDocument {
                version: DOCUMENT_VERSION,
                profile: p.clone(),
            },
        )?;
        run.write(&format!("wind/fig1_{}.csv", p.season), &envelope_csv(p)?)?;
        info!(
            "{}: {} training days, mean envelope width {:.3}",
            p.season,
            p.n_days,
            p.mean_envelope_width()
        );
    }
    run.write("wind/fig2_actual_mean.csv", &actual_mean_csv(&profiles)?)?;

    let annual = if w.speed.is_some() || w.power.is_none() {
        let speed = load_series(&mut run, w.speed.as_deref(), SeriesMode::Speed, &synth, w.training_years)?;
        let a = build_annual_profile(&speed.filter_years(train_years), &w.turbine)?;
        run.write_json(
            ANNUAL_WIND_PROFILE,
            &AnnualProfileDocument {
                version: DOCUMENT_VERSION,
                turbine: w.turbine,
                training_years: w.training_years,
                profile: a.clone(),
            },
        )?;
        Some(a)
    } else {
        info!("no speed series configured; skipping the annual profile");
        None
    };
    let record = run.finish(cfg.seed, cfg.snapshot()?)?;
    Ok(WindOutputs {
        profiles,
        annual,
        record,
    })
}

fn read_wind_profiles(m: &PipelineManifest, out: &Path) -> Result<Vec<NormativeDayProfile>> {
    Season::ALL
        .iter()
        .map(|&s| {
            let doc: WindProfileDocument = m.read_verified_json(out, &wind_profile_path(s))?;
            check_version(doc.version, "wind profile")?;
            if doc.profile.season != s {
                return Err(Error::Argument(format!(
                    "{} holds a {} profile",
                    wind_profile_path(s),
                    doc.profile.season
                )));
            }
            Ok(doc.profile)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ValidationOutputs {
    pub reports: Vec<crate::wind::OutlierReport>,
    pub summary: Vec<OutlierSummaryRow>,
    pub record: StageRecord,
}

/// Tests held-out years against the stored normative-day envelopes.
pub fn validate_wind(cfg: &PipelineConfig, out: &Path) -> Result<ValidationOutputs> {
    inner_validate_wind(cfg, out).map_err(|e| stage_err(STAGE_VALIDATE_WIND, e))
}

fn inner_validate_wind(cfg: &PipelineConfig, out: &Path) -> Result<ValidationOutputs> {
    let w = &cfg.wind;
    let mut run = StageRun::start(STAGE_VALIDATE_WIND, out, serde_json::to_value(w)?);
    let m = PipelineManifest::load_or_default(out)?;
    let profiles = read_wind_profiles(&m, out)?;
    for s in Season::ALL {
        run.input(wind_profile_path(s), m.output_hash(&wind_profile_path(s)).unwrap_or_default());
    }
    let test_years = years(w.test_years)?;
    let power = load_series(&mut run, w.power.as_deref(), SeriesMode::Power, &cfg.synth(), (w.training_years.0.min(w.test_years.0), w.training_years.1.max(w.test_years.1)))?;
    let test = normalize_days(&power.filter_years(test_years))?;
    let reports = cfg
        .execution
        .map(&profiles, |p| detect_outliers(&test, p))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    for r in &reports {
        run.write(&format!("wind/outliers_{}.csv", r.season), &outliers_csv(r)?)?;
        info!("{}: {:.2}% outliers over {} slots", r.season, r.percentage, r.tested_slots);
    }
    let summary = outlier_summary(&reports);
    run.write("wind/outlier_summary.csv", &super::io::csv_bytes(&summary)?)?;
    run.write_json("wind/outlier_summary.json", &summary)?;
    let record = run.finish(cfg.seed, cfg.snapshot()?)?;
    Ok(ValidationOutputs {
        reports,
        summary,
        record,
    })
}

#[derive(Debug, Clone)]
pub struct LoadOutputs {
    pub seasonal: Vec<SeasonalLoadProfile>,
    pub annual: SeasonalLoadProfile,
    pub record: StageRecord,
}

/// Composes the four seasonal system-load curves and the year-round curve.
pub fn build_load(cfg: &PipelineConfig, out: &Path) -> Result<LoadOutputs> {
    inner_build_load(cfg, out).map_err(|e| stage_err(STAGE_BUILD_LOAD, e))
}

fn text_input(run: &mut StageRun, path: Option<&Path>, name: &str, bundled: &'static str) -> Result<String> {
    match path {
        Some(p) => {
            file_input(run, p)?;
            crate::ingest::read_to_string(p)
        }
        None => {
            bundled_input(run, name, bundled);
            Ok(bundled.to_string())
        }
    }
}

fn inner_build_load(cfg: &PipelineConfig, out: &Path) -> Result<LoadOutputs> {
    let l = &cfg.load;
    let mut run = StageRun::start(STAGE_BUILD_LOAD, out, serde_json::to_value(l)?);
    let table = parse_demand_table_str(&text_input(&mut run, l.demand.as_deref(), "demand.csv", bundled::DEMAND)?)?;
    let shapes = if l.shapes.is_empty() {
        bundled_input(&mut run, "shapes.csv", bundled::SHAPES);
        parse_shapes_str(bundled::SHAPES)?
    } else {
        let mut set = ShapeSet::default();
        for p in &l.shapes {
            file_input(&mut run, p)?;
            set = set.merge(crate::load::parse_shapes(p)?);
        }
        set
    };
    let ratios: LoadRatioSet =
        parse_load_ratios_str(&text_input(&mut run, l.ratios.as_deref(), "load_ratios.csv", bundled::LOAD_RATIOS)?)?;
    let seasonal = build_load_profiles(&table, &shapes, &ratios, years(l.training_years)?)?;
    let annual = annual_load_profile(&seasonal)?;
    for p in seasonal.iter().chain(std::iter::once(&annual)) {
        run.write_json(
            &load_profile_path(p.period),
            &LoadProfileDocument {
                version: DOCUMENT_VERSION,
                training_years: l.training_years,
                profile: p.clone(),
            },
        )?;
    }
    run.write("load/fig3_percent.csv", &load_percent_csv(&seasonal)?)?;
    run.write("load/fig4_mw.csv", &load_mw_csv(&seasonal)?)?;
    let record = run.finish(cfg.seed, cfg.snapshot()?)?;
    Ok(LoadOutputs {
        seasonal,
        annual,
        record,
    })
}

fn read_load_profile(m: &PipelineManifest, out: &Path, p: Period) -> Result<SeasonalLoadProfile> {
    let doc: LoadProfileDocument = m.read_verified_json(out, &load_profile_path(p))?;
    check_version(doc.version, "load profile")?;
    if doc.profile.period != p {
        return Err(Error::Argument(format!("{} holds a {} profile", load_profile_path(p), doc.profile.period)));
    }
    Ok(doc.profile)
}

#[derive(Debug, Clone)]
pub struct ScanOutputs {
    pub reports: BTreeMap<Approach, ViolationReport>,
    pub ranking: Option<VulnerabilityRanking>,
    pub comparison: Option<Vec<ComparisonRow>>,
    pub record: StageRecord,
}

/// Dispatches every period, runs the configured approaches and ranks buses.
pub fn scan(cfg: &PipelineConfig, out: &Path) -> Result<ScanOutputs> {
    inner_scan(cfg, out).map_err(|e| stage_err(STAGE_SCAN, e))
}

pub fn load_case(run: &mut StageRun, path: Option<&Path>) -> Result<NetworkCase> {
    match path {
        Some(p) => {
            file_input(run, p)?;
            import_case(p)
        }
        None => {
            bundled_input(run, "case118.m", bundled::CASE118);
            parse_matpower(bundled::CASE118)
        }
    }
}

fn inner_scan(cfg: &PipelineConfig, out: &Path) -> Result<ScanOutputs> {
    let s = &cfg.scan;
    let mut approaches = s.approaches.clone();
    approaches.sort();
    approaches.dedup();
    if approaches.is_empty() {
        return Err(Error::Argument("no scan approach selected".into()));
    }
    let configs: Vec<ScanConfig> = approaches.iter().map(|&a| cfg.scan_config(a)).collect();
    for c in &configs {
        c.validate()?;
    }

    let mut run = StageRun::start(STAGE_SCAN, out, serde_json::to_value(s)?);
    let m = PipelineManifest::load_or_default(out)?;
    let case = load_case(&mut run, s.case.as_deref())?;
    let pf = PowerFlow::new(&case);
    let alloc = LoadAllocation::proportional(&case);

    let profiles = read_wind_profiles(&m, out)?;
    for season in Season::ALL {
        let rel = wind_profile_path(season);
        run.input(rel.clone(), m.output_hash(&rel).unwrap_or_default());
    }
    let annual = if approaches.contains(&Approach::SeasonIndependent) {
        let doc: AnnualProfileDocument = m.read_verified_json(out, ANNUAL_WIND_PROFILE).map_err(|e| match e {
            Error::Argument(_) => Error::Argument(
                "the season-independent approach needs the annual wind profile; configure wind.speed".into(),
            ),
            e => e,
        })?;
        check_version(doc.version, "annual wind profile")?;
        run.input(ANNUAL_WIND_PROFILE, m.output_hash(ANNUAL_WIND_PROFILE).unwrap_or_default());
        Some(doc.profile)
    } else {
        None
    };
    let factor_inputs = FactorInputs {
        seasonal: &profiles,
        annual: annual.as_ref(),
    };

    let mut periods: Vec<Period> = approaches.iter().flat_map(|a| a.periods()).collect();
    periods.sort();
    periods.dedup();
    let mut schedules: Vec<DispatchSchedule> = Vec::new();
    for &p in &periods {
        let load = read_load_profile(&m, out, p)?;
        run.input(load_profile_path(p), m.output_hash(&load_profile_path(p)).unwrap_or_default());
        let sched = build_dispatch_schedule(&pf, &load, &alloc, &s.pf).map_err(|e| stage_err(&format!("{p} dispatch"), e))?;
        run.write(&format!("scan/dispatch_{p}.csv"), &dispatch_csv(&sched)?)?;
        let sols: Vec<_> = sched.slots.iter().enumerate().map(|(h, d)| (h + 1, &d.solution)).collect();
        let buses: Vec<u32> = case.buses.iter().map(|b| b.id).collect();
        run.write(&format!("scan/dispatch_{p}_pf.csv"), &voltages_csv(&buses, &sols)?)?;
        schedules.push(sched);
    }

    let mut reports = BTreeMap::new();
    for (a, c) in approaches.iter().zip(&configs) {
        let factors = ScaleFactorTable::build(&factor_inputs, *a, &c.modes)?;
        run.write(&format!("scan/factors_{}.csv", a.name()), &factors_csv(&factors)?)?;
        let mut report = run_scan(
            &ScanInputs {
                pf: &pf,
                schedules: &schedules,
                factors: &factors,
            },
            c,
        )?;
        report.metadata.inputs = run.inputs().clone();
        run.write(&report_path(*a, "csv"), &violation_csv(&report)?)?;
        run.write_json(&report_path(*a, "json"), &report)?;
        info!("{} scan: {} diverged cases", a.name(), report.diverged());
        reports.insert(*a, report);
    }

    let ranking = match reports.get(&Approach::SeasonFocused) {
        Some(r) if has_ranking_cases(r) => {
            let rank = rank_vulnerability(r)?;
            run.write("scan/ranking.csv", &ranking_csv(&rank)?)?;
            run.write_json("scan/ranking.json", &rank)?;
            Some(rank)
        }
        _ => None,
    };
    if let Some(r) = reports.get(&Approach::SeasonFocused).or(reports.get(&Approach::SeasonIndependent)) {
        if r.tallies.iter().any(|t| t.criterion == Criterion::Absolute) {
            run.write("scan/fig5_annual_violations.csv", &annual_violation_csv(r)?)?;
        }
    }
    let comparison = match (reports.get(&Approach::SeasonFocused), reports.get(&Approach::SeasonIndependent)) {
        (Some(f), Some(i)) => {
            let rows = compare_approaches(f, i)?;
            run.write("scan/comparison.csv", &comparison_csv(&rows)?)?;
            run.write_json("scan/comparison.json", &rows)?;
            Some(rows)
        }
        _ => None,
    };
    let record = run.finish(cfg.seed, cfg.snapshot()?)?;
    Ok(ScanOutputs {
        reports,
        ranking,
        comparison,
        record,
    })
}

/// Ranking pools the relative mean-mode and absolute min/max cases.
fn has_ranking_cases(r: &ViolationReport) -> bool {
    let has = |c, m| Season::ALL.iter().all(|&s| r.tally(s.into(), c, m).is_some());
    has(Criterion::Relative, Mode::Mean) && has(Criterion::Absolute, Mode::Min) && has(Criterion::Absolute, Mode::Max)
}

pub const SUMMARY_FILE: &str = "summary.md";

/// Verifies the manifest and renders the Markdown summary of the last scan.
pub fn report(out: &Path) -> Result<String> {
    inner_report(out).map_err(|e| stage_err(STAGE_REPORT, e))
}

fn parse<T: serde::de::DeserializeOwned>(rel: &str, bytes: Vec<u8>) -> Result<T> {
    serde_json::from_slice(&bytes).map_err(|e| Error::Structure(format!("{rel}: {e}")))
}

fn inner_report(out: &Path) -> Result<String> {
    let manifest_path = PipelineManifest::path(out);
    if !manifest_path.exists() {
        return Err(Error::Argument(format!("{} not found; run a stage first", manifest_path.display())));
    }
    let m = PipelineManifest::load(&manifest_path)?;
    m.verify(out)?;
    let mut run = StageRun::start(STAGE_REPORT, out, serde_json::Value::Null);
    let read_opt = |rel: &str| -> Result<Option<Vec<u8>>> {
        match m.output_hash(rel) {
            Some(_) => m.read_verified(out, rel).map(Some),
            None => Ok(None),
        }
    };
    let mut docs: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    let names = [
        "scan/report_season-focused.json",
        "scan/report_season-independent.json",
        "scan/ranking.json",
        "scan/comparison.json",
    ];
    for rel in names {
        if let Some(b) = read_opt(rel)? {
            run.input(rel, sha256_hex(&b));
            docs.insert(rel, b);
        }
    }
    if docs.is_empty() {
        return Err(Error::Argument("the manifest records no scan outputs; run scan first".into()));
    }
    let focused: Option<ViolationReport> = docs.remove(names[0]).map(|b| parse(names[0], b)).transpose()?;
    let independent: Option<ViolationReport> = docs.remove(names[1]).map(|b| parse(names[1], b)).transpose()?;
    let ranking: Option<VulnerabilityRanking> = docs.remove(names[2]).map(|b| parse(names[2], b)).transpose()?;
    let comparison: Option<Vec<ComparisonRow>> = docs.remove(names[3]).map(|b| parse(names[3], b)).transpose()?;
    let text = render_summary(&SummaryInputs {
        focused: focused.as_ref(),
        independent: independent.as_ref(),
        ranking: ranking.as_ref(),
        comparison: comparison.as_deref(),
    });
    run.write(SUMMARY_FILE, text.as_bytes())?;
    run.finish(m.seed, m.config.clone())?;
    Ok(text)
}
