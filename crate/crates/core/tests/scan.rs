//! Scan behaviour on the bundled 118-bus case with small schedules.

use std::sync::OnceLock;

use gridseason::grid::{build_dispatch_schedule, DispatchSchedule, Injections, LoadAllocation, PfOptions, PowerFlow};
use gridseason::ingest::{parse_demand_table_str, parse_matpower, NetworkCase};
use gridseason::load::{build_load_profiles, parse_load_ratios_str, parse_shapes_str, SeasonalLoadProfile};
use gridseason::report::pipeline::bundled;
use gridseason::scan::*;
use gridseason::{Execution, Period};
use proptest::prelude::*;

fn case() -> &'static NetworkCase {
    static CASE: OnceLock<NetworkCase> = OnceLock::new();
    CASE.get_or_init(|| parse_matpower(bundled::CASE118).unwrap())
}

fn loads() -> Vec<SeasonalLoadProfile> {
    let table = parse_demand_table_str(bundled::DEMAND).unwrap();
    let shapes = parse_shapes_str(bundled::SHAPES).unwrap();
    let ratios = parse_load_ratios_str(bundled::LOAD_RATIOS).unwrap();
    build_load_profiles(&table, &shapes, &ratios, 2007..=2011).unwrap()
}

/// Dispatch of every season, computed once.
fn schedules() -> &'static [DispatchSchedule] {
    static S: OnceLock<Vec<DispatchSchedule>> = OnceLock::new();
    S.get_or_init(|| {
        let c = case();
        let pf = PowerFlow::new(c);
        let alloc = LoadAllocation::proportional(c);
        loads()
            .iter()
            .map(|l| build_dispatch_schedule(&pf, l, &alloc, &PfOptions::default()).unwrap())
            .collect()
    })
}

fn ramp_factors(modes: &[Mode]) -> ScaleFactorTable {
    let mut t = ScaleFactorTable::unity(Approach::SeasonFocused, modes);
    for r in &mut t.rows {
        for (h, f) in r.factors.iter_mut().enumerate() {
            *f = 0.2 + 1.6 * h as f64 / 47.0;
        }
    }
    t
}

#[test]
fn zero_penetration_matches_a_direct_load_only_loop() {
    let c = case();
    let pf = PowerFlow::new(c);
    let config = ScanConfig {
        selections: 2,
        penetration: 0.0,
        modes: vec![Mode::Mean],
        ..ScanConfig::default()
    };
    let factors = ramp_factors(&config.modes);
    let report = run_scan(
        &ScanInputs {
            pf: &pf,
            schedules: schedules(),
            factors: &factors,
        },
        &config,
    )
    .unwrap();
    assert!(report.selections.iter().all(|s| s.buses.is_empty()));

    // oracle: solve each slot's load from a flat start, no selection machinery
    let base = pf.solve(&Injections::from_case(c), &config.pf, None).unwrap();
    for sched in schedules() {
        let mut expected = [vec![0usize; c.buses.len()], vec![0usize; c.buses.len()]];
        for d in &sched.slots {
            let inj = Injections {
                pd: d.pd.clone(),
                qd: d.qd.clone(),
                pg: d.solution.pg.clone(),
                ..Injections::from_case(c)
            };
            let sol = pf.solve(&inj, &config.pf, None).unwrap();
            for (i, (&v, &b)) in sol.vm.iter().zip(&base.vm).enumerate() {
                if (v - b).abs() > config.relative_threshold * b {
                    expected[0][i] += config.selections;
                }
                if v < config.band.0 || v > config.band.1 {
                    expected[1][i] += config.selections;
                }
            }
        }
        for (k, cr) in [Criterion::Relative, Criterion::Absolute].into_iter().enumerate() {
            let t = report.tally(sched.period, cr, Mode::Mean).unwrap();
            assert_eq!(t.total, 48 * config.selections);
            assert_eq!(t.counts, expected[k], "{} {cr}", sched.period);
        }
    }
}

#[test]
fn serial_and_parallel_reports_are_identical() {
    let pf = PowerFlow::new(case());
    let modes = [Mode::Min, Mode::Max];
    let factors = ramp_factors(&modes);
    let inputs = ScanInputs {
        pf: &pf,
        schedules: schedules(),
        factors: &factors,
    };
    let base = ScanConfig {
        selections: 2,
        seed: 3,
        modes: modes.to_vec(),
        ..ScanConfig::default()
    };
    let a = run_scan(&inputs, &ScanConfig { execution: Execution::Serial, ..base.clone() }).unwrap();
    let b = run_scan(&inputs, &ScanConfig { execution: Execution::Parallel, ..base }).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let t = a.tally(Period::Summer, Criterion::Absolute, Mode::Max).unwrap();
    assert_eq!(t.total + t.diverged, 96);
}

#[test]
fn different_seeds_draw_different_selections() {
    let c = case();
    let base = ScanConfig::default();
    let draw = |seed| {
        (0..5)
            .map(|i| select_wind_buses(c, &ScanConfig { seed, ..base.clone() }, i).unwrap().buses)
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(7), draw(7));
    assert_ne!(draw(7), draw(8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn non_wind_injections_are_untouched(
        mask in proptest::collection::vec(any::<bool>(), 54),
        factor in 0.0f64..3.0,
        slot in 0usize..48,
    ) {
        let c = case();
        let pf = PowerFlow::new(c);
        prop_assume!(mask.len() == c.generators.len());
        let d = &schedules()[1].slots[slot];
        let inj = cell_injections(&pf, d, &mask, factor);
        prop_assert_eq!(&inj.pd, &d.pd);
        prop_assert_eq!(&inj.qd, &d.qd);
        for g in 0..mask.len() {
            if mask[g] {
                prop_assert_eq!(inj.pg[g], factor * d.solution.pg[g]);
            } else {
                prop_assert_eq!(inj.pg[g], d.solution.pg[g]);
            }
        }
        for &g in &d.solution.q_limited {
            prop_assert_eq!(inj.fixed_q[g], Some(d.solution.qg[g]));
        }
    }
}

#[test]
fn selections_respect_the_penetration_band() {
    let c = case();
    let config = ScanConfig::default();
    let total: f64 = c
        .generators
        .iter()
        .filter(|g| g.in_service)
        .map(|g| g.pmax)
        .sum();
    for i in 0..20 {
        let s = select_wind_buses(c, &config, i).unwrap();
        let cap: f64 = c
            .generators
            .iter()
            .filter(|g| g.in_service && s.buses.binary_search(&g.bus).is_ok())
            .map(|g| g.pmax)
            .sum();
        assert!((cap / total - config.penetration).abs() <= config.tolerance + 1e-12);
        assert!((s.penetration - cap / total).abs() < 1e-12);
    }
}
