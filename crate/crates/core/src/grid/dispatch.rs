//! Loss-iterated economic dispatch standing in for an optimal power flow.

use log::info;
use serde::{Deserialize, Serialize};

use super::acpf::{Injections, PfOptions, PfSolution, PowerFlow};
use crate::ingest::{CostCurve, NetworkCase};
use crate::load::SeasonalLoadProfile;
use crate::{Error, Period, Result};

/// Rounds of dispatch and power flow before giving up on loss convergence.
const MAX_LOSS_ROUNDS: usize = 50;
/// Loss iteration stops once the dispatched total moves less than this, p.u.
const LOSS_TOL_PU: f64 = 1e-6;

/// How system load is spread over buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadAllocation {
    pub weights: Vec<f64>,
}

impl LoadAllocation {
    /// Each bus keeps its share of the base-case active load.
    pub fn proportional(case: &NetworkCase) -> LoadAllocation {
        let total = case.total_load_mw();
        LoadAllocation {
            weights: case.buses.iter().map(|b| b.pd / total).collect(),
        }
    }

    pub fn new(case: &NetworkCase, weights: Vec<f64>) -> Result<LoadAllocation> {
        if weights.len() != case.buses.len() {
            return Err(Error::Argument("allocation needs one weight per bus".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Argument("allocation weights must be non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("allocation weights sum to {sum}, not 1")));
        }
        Ok(LoadAllocation { weights })
    }

    /// Bus loads at `percent` of the base system load. Each bus keeps its
    /// base Q/P ratio; buses with no base active load scale their reactive
    /// load directly.
    pub fn bus_loads(&self, case: &NetworkCase, percent: f64) -> (Vec<f64>, Vec<f64>) {
        let f = percent / 100.0;
        let total = case.total_load_mw();
        let mut pd = Vec::with_capacity(case.buses.len());
        let mut qd = Vec::with_capacity(case.buses.len());
        for (b, w) in case.buses.iter().zip(&self.weights) {
            let p = f * total * w;
            pd.push(p);
            qd.push(if b.pd != 0.0 { p * b.qd / b.pd } else { f * b.qd });
        }
        (pd, qd)
    }
}

fn cost_curves(case: &NetworkCase) -> Vec<CostCurve> {
    if case.costs.len() == case.generators.len() {
        case.costs.clone()
    } else {
        info!("case has no generator costs; using identical quadratics");
        vec![CostCurve::quadratic(1.0, 0.0, 0.0); case.generators.len()]
    }
}

/// Output of one unit at incremental cost `lambda`, within its limits.
fn output_at(curve: &CostCurve, pmin: f64, pmax: f64, lambda: f64) -> f64 {
    match curve.as_quadratic() {
        Some((c2, c1)) if c2 > 0.0 => ((lambda - c1) / (2.0 * c2)).clamp(pmin, pmax),
        Some((_, c1)) => {
            if lambda > c1 {
                pmax
            } else {
                pmin
            }
        }
        None => {
            let (mut lo, mut hi) = (pmin, pmax);
            if curve.marginal(lo) >= lambda {
                return pmin;
            }
            if curve.marginal(hi) <= lambda {
                return pmax;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if curve.marginal(mid) < lambda {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

/// Equal-incremental-cost dispatch of `demand_mw` over in-service units.
pub fn economic_dispatch(case: &NetworkCase, demand_mw: f64) -> Result<Vec<f64>> {
    let curves = cost_curves(case);
    let units: Vec<usize> = case.in_service_generators().map(|(g, _)| g).collect();
    let gens = &case.generators;
    let min_mw: f64 = units.iter().map(|&g| gens[g].pmin).sum();
    let max_mw: f64 = units.iter().map(|&g| gens[g].pmax).sum();
    if !(demand_mw >= min_mw - 1e-9 && demand_mw <= max_mw + 1e-9) {
        return Err(Error::InfeasibleDispatch { demand_mw, min_mw, max_mw });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &g in &units {
        lo = lo.min(curves[g].marginal(gens[g].pmin));
        hi = hi.max(curves[g].marginal(gens[g].pmax));
    }
    let (mut lo, mut hi) = (lo - 1.0, hi + 1.0);
    let total = |lambda: f64| -> f64 {
        units
            .iter()
            .map(|&g| output_at(&curves[g], gens[g].pmin, gens[g].pmax, lambda))
            .sum()
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < demand_mw {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut p = vec![0.0; gens.len()];
    for &g in &units {
        p[g] = output_at(&curves[g], gens[g].pmin, gens[g].pmax, lo);
    }
    // Units with flat marginal cost at the clearing price, then any unit
    // with headroom, take up what the price steps leave over.
    let mut residual = demand_mw - units.iter().map(|&g| p[g]).sum::<f64>();
    let mut order: Vec<usize> = units.clone();
    order.sort_by(|&a, &b| {
        let da = (curves[a].marginal(p[a]) - lambda).abs();
        let db = (curves[b].marginal(p[b]) - lambda).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    for &g in &order {
        if residual.abs() < 1e-12 {
            break;
        }
        let room = if residual > 0.0 { gens[g].pmax - p[g] } else { gens[g].pmin - p[g] };
        let take = if residual > 0.0 { residual.min(room) } else { residual.max(room) };
        p[g] += take;
        residual -= take;
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub load_percent: f64,
    pub load_mw: f64,
    pub losses_mw: f64,
    pub rounds: usize,
    pub pd: Vec<f64>,
    pub qd: Vec<f64>,
    /// Converged operating point; its `pg`/`qg` are the dispatch.
    pub solution: PfSolution,
}

/// Dispatch → power flow → losses, repeated until the dispatched total settles.
pub fn dispatch_opf(
    pf: &PowerFlow,
    load_percent: f64,
    allocation: &LoadAllocation,
    opts: &PfOptions,
    start: Option<&PfSolution>,
) -> Result<DispatchResult> {
    if !(load_percent > 0.0 && load_percent <= 150.0) {
        return Err(Error::Argument(format!("load fraction {load_percent}% outside (0, 150]")));
    }
    let case = pf.case;
    let (pd, qd) = allocation.bus_loads(case, load_percent);
    let load_mw: f64 = pd.iter().sum();
    let base_fixed = Injections::from_case(case).fixed_q;
    let mut losses = 0.0;
    let mut dispatched_prev: Option<f64> = None;
    let mut warm = start.cloned();
    for round in 1..=MAX_LOSS_ROUNDS {
        let dispatched = load_mw + losses;
        let pg = economic_dispatch(case, dispatched)?;
        let inj = Injections {
            pd: pd.clone(),
            qd: qd.clone(),
            pg,
            fixed_q: base_fixed.clone(),
        };
        let sol = pf.solve(&inj, opts, warm.as_ref())?;
        let generated: f64 = sol.pg.iter().sum();
        losses = generated - load_mw;
        let settled = dispatched_prev.is_some_and(|d| (dispatched - d).abs() < LOSS_TOL_PU * case.base_mva)
            || (load_mw + losses - dispatched).abs() < LOSS_TOL_PU * case.base_mva;
        if settled {
            return Ok(DispatchResult {
                load_percent,
                load_mw,
                losses_mw: losses,
                rounds: round,
                pd,
                qd,
                solution: sol,
            });
        }
        dispatched_prev = Some(dispatched);
        warm = Some(sol);
    }
    Err(Error::Diverged {
        iterations: MAX_LOSS_ROUNDS,
        trace: vec![losses],
    })
}

/// Per-slot dispatch for one load profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSchedule {
    pub period: Period,
    pub slots: Vec<DispatchResult>,
}

/// Runs [`dispatch_opf`] at every slot of `profile`, warm-starting each slot
/// from the previous one.
pub fn build_dispatch_schedule(
    pf: &PowerFlow,
    profile: &SeasonalLoadProfile,
    allocation: &LoadAllocation,
    opts: &PfOptions,
) -> Result<DispatchSchedule> {
    let mut slots: Vec<DispatchResult> = Vec::with_capacity(profile.percent.len());
    for (h, &pct) in profile.percent.iter().enumerate() {
        let start = slots.last().map(|r| &r.solution);
        let r = dispatch_opf(pf, pct, allocation, opts, start).map_err(|e| Error::Slot {
            slot: h + 1,
            source: Box::new(e),
        })?;
        slots.push(r);
    }
    Ok(DispatchSchedule {
        period: profile.period,
        slots,
    })
}
