use std::collections::BTreeMap;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{select_wind_buses, Approach, Criterion, Mode, ScaleFactorTable, ScanConfig, WindSelection};
use crate::grid::{DispatchSchedule, Injections, PfSolution, PowerFlow};
use crate::{Error, Period, Result, SLOTS_PER_DAY};

/// Everything a scan consumes besides its configuration.
#[derive(Clone, Copy)]
pub struct ScanInputs<'a> {
    pub pf: &'a PowerFlow<'a>,
    /// One schedule per scanned period. Bus loads are taken from these.
    pub schedules: &'a [DispatchSchedule],
    pub factors: &'a ScaleFactorTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub seed: u64,
    pub selections: usize,
    pub approach: Approach,
    pub modes: Vec<Mode>,
    pub penetration: f64,
    pub tolerance: f64,
    pub relative_threshold: f64,
    pub band: (f64, f64),
    pub pf_tolerance: f64,
    pub pf_max_iter: usize,
    /// Free-form input fingerprints (file hashes, versions) set by callers.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
}

/// Violation counts for one (period, criterion, mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub period: Period,
    pub criterion: Criterion,
    pub mode: Mode,
    /// Converged cases.
    pub total: usize,
    pub diverged: usize,
    /// Per bus, in case order.
    pub counts: Vec<usize>,
}

impl Tally {
    pub fn fraction(&self, bus: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[bus] as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub metadata: ScanMetadata,
    pub buses: Vec<u32>,
    /// Solved base-case magnitudes the relative criterion compares to.
    pub base_vm: Vec<f64>,
    pub selections: Vec<WindSelection>,
    pub tallies: Vec<Tally>,
}

/// One flattened report line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub bus: u32,
    pub season: Period,
    pub criterion: Criterion,
    pub mode: Mode,
    pub count: usize,
    pub total: usize,
    pub fraction: f64,
}

impl ViolationReport {
    pub fn tally(&self, period: Period, criterion: Criterion, mode: Mode) -> Option<&Tally> {
        self.tallies
            .iter()
            .find(|t| t.period == period && t.criterion == criterion && t.mode == mode)
    }

    pub fn bus_position(&self, bus: u32) -> Option<usize> {
        self.buses.iter().position(|&b| b == bus)
    }

    pub fn diverged(&self) -> usize {
        // each cell is counted once per criterion
        let criteria = self.tallies.iter().map(|t| t.criterion).collect::<std::collections::BTreeSet<_>>();
        let sum: usize = self.tallies.iter().map(|t| t.diverged).sum();
        sum / criteria.len().max(1)
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::with_capacity(self.buses.len() * self.tallies.len());
        for (i, &bus) in self.buses.iter().enumerate() {
            for t in &self.tallies {
                rows.push(ReportRow {
                    bus,
                    season: t.period,
                    criterion: t.criterion,
                    mode: t.mode,
                    count: t.counts[i],
                    total: t.total,
                    fraction: t.fraction(i),
                });
            }
        }
        rows
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    selection: usize,
    period: usize,
    slot: usize,
    mode: usize,
}

/// Violating bus positions per criterion, or `None` for a diverged case.
type CellOutcome = Option<Vec<Vec<u32>>>;

/// Tests every bus of a solution against each criterion.
pub fn violating_buses(vm: &[f64], base_vm: &[f64], criterion: Criterion, config: &ScanConfig) -> Vec<u32> {
    vm.iter()
        .zip(base_vm)
        .enumerate()
        .filter(|(_, (&v, &b))| match criterion {
            Criterion::Relative => (v - b).abs() > config.relative_threshold * b,
            Criterion::Absolute => v < config.band.0 || v > config.band.1,
        })
        .map(|(i, _)| i as u32)
        .collect()
}

/// Injections for one scan cell: the dispatch at that slot with wind units
/// scaled by `factor`.
///
/// Wind active power is scaled. Reactive output is scaled only where it is
/// an input, i.e. for units on PQ buses; voltage-regulating wind units keep
/// regulating and their Q follows from the solution. Units the dispatch
/// left at a reactive limit stay at that limit.
pub fn cell_injections(pf: &PowerFlow, dispatch: &crate::grid::DispatchResult, wind: &[bool], factor: f64) -> Injections {
    let sol = &dispatch.solution;
    let mut inj = Injections::from_case(pf.case);
    inj.pd = dispatch.pd.clone();
    inj.qd = dispatch.qd.clone();
    inj.pg = sol.pg.clone();
    for (g, _) in wind.iter().enumerate().filter(|(_, w)| **w) {
        inj.pg[g] = factor * sol.pg[g];
        if let Some(q) = inj.fixed_q[g] {
            inj.fixed_q[g] = Some(factor * q);
        }
    }
    for &g in &sol.q_limited {
        inj.fixed_q[g] = Some(sol.qg[g]);
    }
    inj
}

/// Solved voltages of the unmodified case at 100% load.
pub fn base_case(pf: &PowerFlow, config: &ScanConfig) -> Result<PfSolution> {
    pf.solve(&Injections::from_case(pf.case), &config.pf, None)
}

/// Runs every (selection, period, slot, mode) cell and tallies violations.
pub fn run_scan(inputs: &ScanInputs, config: &ScanConfig) -> Result<ViolationReport> {
    config.validate()?;
    let pf = inputs.pf;
    let case = pf.case;
    let approach = config.approach;
    if inputs.factors.approach != approach {
        return Err(Error::Argument(format!(
            "scale factors were built for the {} approach, scan runs {}",
            inputs.factors.approach, approach
        )));
    }
    let periods = approach.periods();
    let modes = config.modes_for(approach);
    let mut schedules = Vec::with_capacity(periods.len());
    let mut factors = Vec::with_capacity(periods.len());
    for &p in &periods {
        let s = inputs
            .schedules
            .iter()
            .find(|s| s.period == p)
            .ok_or_else(|| Error::Argument(format!("no dispatch schedule for {p}")))?;
        if s.slots.len() != SLOTS_PER_DAY {
            return Err(Error::Argument(format!("{p} dispatch has {} slots", s.slots.len())));
        }
        if s.slots.iter().any(|d| d.pd.len() != case.buses.len()) {
            return Err(Error::Argument(format!("{p} dispatch does not match the case")));
        }
        schedules.push(s);
        let mut row = Vec::with_capacity(modes.len());
        for &m in &modes {
            row.push(
                inputs
                    .factors
                    .get(p, m)
                    .ok_or_else(|| Error::Argument(format!("no {m}-mode factors for {p}")))?,
            );
        }
        factors.push(row);
    }

    let base = base_case(pf, config)?;
    let selections = (0..config.selections)
        .map(|i| select_wind_buses(case, config, i))
        .collect::<Result<Vec<_>>>()?;
    let wind_masks: Vec<Vec<bool>> = selections
        .iter()
        .map(|s| {
            case.generators
                .iter()
                .map(|g| g.in_service && s.buses.binary_search(&g.bus).is_ok())
                .collect()
        })
        .collect();

    let mut cells = Vec::with_capacity(selections.len() * periods.len() * SLOTS_PER_DAY * modes.len());
    for selection in 0..selections.len() {
        for period in 0..periods.len() {
            for slot in 0..SLOTS_PER_DAY {
                for mode in 0..modes.len() {
                    cells.push(Cell {
                        selection,
                        period,
                        slot,
                        mode,
                    });
                }
            }
        }
    }
    info!("scanning {} cells ({approach})", cells.len());

    let outcomes: Vec<Result<CellOutcome>> = config.execution.map(&cells, |c| {
        let dispatch = &schedules[c.period].slots[c.slot];
        let factor = factors[c.period][c.mode][c.slot];
        let inj = cell_injections(pf, dispatch, &wind_masks[c.selection], factor);
        match pf.solve(&inj, &config.pf, Some(&dispatch.solution)) {
            Ok(sol) => Ok(Some(
                config
                    .criteria
                    .iter()
                    .map(|&cr| violating_buses(&sol.vm, &base.vm, cr, config))
                    .collect(),
            )),
            Err(Error::Diverged { .. }) | Err(Error::SingularJacobian { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });

    let mut criteria = config.criteria.clone();
    criteria.sort();
    let mut tallies: BTreeMap<(Period, Criterion, Mode), Tally> = BTreeMap::new();
    for &p in &periods {
        for &cr in &criteria {
            for &m in &modes {
                tallies.insert(
                    (p, cr, m),
                    Tally {
                        period: p,
                        criterion: cr,
                        mode: m,
                        total: 0,
                        diverged: 0,
                        counts: vec![0; case.buses.len()],
                    },
                );
            }
        }
    }
    let mut diverged = 0;
    for (c, outcome) in cells.iter().zip(outcomes) {
        let (p, m) = (periods[c.period], modes[c.mode]);
        match outcome? {
            Some(per_criterion) => {
                for (&cr, buses) in config.criteria.iter().zip(per_criterion) {
                    let t = tallies.get_mut(&(p, cr, m)).expect("tally exists");
                    t.total += 1;
                    for b in buses {
                        t.counts[b as usize] += 1;
                    }
                }
            }
            None => {
                diverged += 1;
                for &cr in &criteria {
                    tallies.get_mut(&(p, cr, m)).expect("tally exists").diverged += 1;
                }
            }
        }
    }
    if diverged > 0 {
        warn!("{diverged} of {} scan cases diverged and were excluded", cells.len());
    }

    Ok(ViolationReport {
        metadata: ScanMetadata {
            seed: config.seed,
            selections: config.selections,
            approach,
            modes,
            penetration: config.penetration,
            tolerance: config.tolerance,
            relative_threshold: config.relative_threshold,
            band: config.band,
            pf_tolerance: config.pf.tolerance,
            pf_max_iter: config.pf.max_iter,
            inputs: BTreeMap::new(),
        },
        buses: case.buses.iter().map(|b| b.id).collect(),
        base_vm: base.vm,
        selections,
        tallies: tallies.into_values().collect(),
    })
}

/// Per-bus relative-criterion mean-mode counts of both approaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub bus: u32,
    pub winter: usize,
    pub spring: usize,
    pub summer: usize,
    pub fall: usize,
    pub focused_total: usize,
    pub independent: usize,
    /// Violations only under the season-focused approach.
    pub focused_only: bool,
}

pub fn compare_approaches(focused: &ViolationReport, independent: &ViolationReport) -> Result<Vec<ComparisonRow>> {
    if focused.metadata.approach != Approach::SeasonFocused || independent.metadata.approach != Approach::SeasonIndependent {
        return Err(Error::Argument("comparison needs one report of each approach".into()));
    }
    if focused.buses != independent.buses {
        return Err(Error::Argument("reports cover different cases".into()));
    }
    let need = |r: &ViolationReport, p: Period| {
        r.tally(p, Criterion::Relative, Mode::Mean)
            .ok_or_else(|| Error::Argument(format!("report lacks relative mean-mode counts for {p}")))
            .map(|t| t.counts.clone())
    };
    let [w, sp, su, fa] = [Period::Winter, Period::Spring, Period::Summer, Period::Fall].map(|p| need(focused, p));
    let (w, sp, su, fa, ind) = (w?, sp?, su?, fa?, need(independent, Period::Annual)?);
    Ok(focused
        .buses
        .iter()
        .enumerate()
        .map(|(i, &bus)| {
            let total = w[i] + sp[i] + su[i] + fa[i];
            ComparisonRow {
                bus,
                winter: w[i],
                spring: sp[i],
                summer: su[i],
                fall: fa[i],
                focused_total: total,
                independent: ind[i],
                focused_only: total > 0 && ind[i] == 0,
            }
        })
        .collect())
}
