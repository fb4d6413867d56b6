//! Monte-Carlo wind placement scans and bus vulnerability ranking.

mod config;
mod factors;
mod ranking;
mod run;
mod selection;

pub use config::{Approach, Criterion, Mode, ScanConfig};
pub use factors::{scale_factor, FactorInputs, FactorRow, ScaleFactorTable};
pub use ranking::{rank_counts, rank_vulnerability, vulnerability_index, CaseCounts, RankEntry, RankGroup, VulnerabilityRanking};
pub use run::{
    base_case, cell_injections, compare_approaches, run_scan, violating_buses, ComparisonRow, ReportRow, ScanInputs,
    ScanMetadata, Tally, ViolationReport,
};
pub use selection::{select_wind_buses, WindSelection, SELECTION_ATTEMPTS};
