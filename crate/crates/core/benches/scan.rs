//! Serial versus rayon scan over the bundled 118-bus case.
//!
//! Without the `parallel` feature both variants take the serial path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gridseason::grid::{build_dispatch_schedule, LoadAllocation, PfOptions, PowerFlow};
use gridseason::ingest::{parse_demand_table_str, parse_matpower};
use gridseason::load::{build_load_profiles, parse_load_ratios_str, parse_shapes_str};
use gridseason::report::pipeline::bundled;
use gridseason::scan::{run_scan, Approach, Mode, ScaleFactorTable, ScanConfig, ScanInputs};
use gridseason::Execution;

fn scan(c: &mut Criterion) {
    let case = parse_matpower(bundled::CASE118).unwrap();
    let pf = PowerFlow::new(&case);
    let table = parse_demand_table_str(bundled::DEMAND).unwrap();
    let shapes = parse_shapes_str(bundled::SHAPES).unwrap();
    let ratios = parse_load_ratios_str(bundled::LOAD_RATIOS).unwrap();
    let loads = build_load_profiles(&table, &shapes, &ratios, 2007..=2011).unwrap();
    let alloc = LoadAllocation::proportional(&case);
    let schedules: Vec<_> = loads
        .iter()
        .map(|l| build_dispatch_schedule(&pf, l, &alloc, &PfOptions::default()).unwrap())
        .collect();
    let mut factors = ScaleFactorTable::unity(Approach::SeasonFocused, &[Mode::Mean]);
    for r in &mut factors.rows {
        for (h, f) in r.factors.iter_mut().enumerate() {
            *f = 0.5 + h as f64 / 48.0;
        }
    }
    let inputs = ScanInputs {
        pf: &pf,
        schedules: &schedules,
        factors: &factors,
    };

    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    for selections in [2usize, 8] {
        for (name, execution) in [("serial", Execution::Serial), ("parallel", Execution::Parallel)] {
            let config = ScanConfig {
                selections,
                modes: vec![Mode::Mean],
                execution,
                ..ScanConfig::default()
            };
            g.bench_with_input(BenchmarkId::new(name, selections), &config, |b, cfg| {
                b.iter(|| black_box(run_scan(&inputs, cfg).unwrap()))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, scan);
criterion_main!(benches);
