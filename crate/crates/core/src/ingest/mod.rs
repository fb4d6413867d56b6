//! Parsing and validation of raw inputs.

pub(crate) mod case;
mod demand;
mod matpower;
mod series;

pub use case::{
    import_case, Branch, Bus, BusType, CostCurve, Generator, NetworkCase, CASE_SCHEMA_VERSION,
};
pub use demand::{parse_demand_table, parse_demand_table_str, EnergyRow, MonthlyEnergyTable, Sector};
pub use matpower::parse_matpower;
pub use series::{
    parse_wind_series, parse_wind_series_str, DropReason, DroppedDay, GapReport, HalfHourlySeries,
    MissingInterval, SeriesDay, SeriesMode, MAX_REPAIR_GAP, MAX_SPEED_MS,
};

use std::path::Path;

use crate::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
