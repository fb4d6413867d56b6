//! Wind-generation profiles.
//!
//! Two paths produce per-slot wind scale information:
//!
//! * the measurement path normalizes each recorded day by its first slot,
//!   selects per-slot representatives across training years and then across
//!   the days of a season, and carries min/max deviation envelopes;
//! * the model path converts a speed history through the turbine curve
//!   into an annual normalized day.

mod normalize;
mod normative;
mod outliers;
mod turbine;
mod weibull;

pub use normalize::{normalize_days, NormalizedDay, NormalizedDayMatrix, REFERENCE_FLOOR_MW};
pub use normative::{
    build_normative_day, build_normative_season, build_profiles, ActualStats, NormativeDayProfile,
    NormativeSeason, ProfileSlot, SeasonSlot,
};
pub use outliers::{detect_outliers, BoundKind, OutlierRecord, OutlierReport};
pub use turbine::{build_annual_profile, speed_to_power, AnnualProfile, TurbineCurve, MIN_ANNUAL_DAYS};
pub use weibull::{fit_weibull, WeibullFit, WeibullParams, MIN_WEIBULL_SAMPLES};

/// Smallest non-negative deviation magnitude below a mean, and largest above.
///
/// Returns `(index of min deviation, |min deviation|, index of max
/// deviation, max deviation)`; both magnitudes are clamped at zero and ties
/// go to the earliest index.
pub(crate) fn deviation_extremes(values: &[f64], mean: f64) -> (usize, f64, usize, f64) {
    let (mut imin, mut dmin, mut imax, mut dmax) = (0, f64::INFINITY, 0, f64::NEG_INFINITY);
    for (i, v) in values.iter().enumerate() {
        let d = v - mean;
        if d < dmin {
            dmin = d;
            imin = i;
        }
        if d > dmax {
            dmax = d;
            imax = i;
        }
    }
    (imin, (-dmin).max(0.0), imax, dmax.max(0.0))
}

/// Index of the value closest to `mean`, earliest on ties.
pub(crate) fn closest_to(values: &[f64], mean: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        let d = (v - mean).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Mean computed relative to the first value, so identical inputs give
/// that value back exactly.
pub(crate) fn mean(values: &[f64]) -> f64 {
    let a = values[0];
    a + values.iter().map(|v| v - a).sum::<f64>() / values.len() as f64
}
