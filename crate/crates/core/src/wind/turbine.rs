use log::info;
use serde::{Deserialize, Serialize};

use super::REFERENCE_FLOOR_MW;
use crate::ingest::{HalfHourlySeries, SeriesMode};
use crate::{Error, Result, SLOTS_PER_DAY};

/// Fewer retained days than this cannot support an annual profile.
pub const MIN_ANNUAL_DAYS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbineCurve {
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub rated_mw: f64,
}

impl TurbineCurve {
    pub fn new(cut_in: f64, rated_speed: f64, cut_out: f64, rated_mw: f64) -> Result<Self> {
        let ok = 0.0 < cut_in && cut_in < rated_speed && rated_speed < cut_out && cut_out.is_finite();
        if !ok {
            return Err(Error::Argument(format!(
                "turbine speeds must satisfy 0 < cut-in < rated < cut-out, got {cut_in}, {rated_speed}, {cut_out}"
            )));
        }
        if !(rated_mw > 0.0 && rated_mw.is_finite()) {
            return Err(Error::Argument(format!("rated power must be positive, got {rated_mw}")));
        }
        Ok(TurbineCurve {
            cut_in,
            rated_speed,
            cut_out,
            rated_mw,
        })
    }
}

impl Default for TurbineCurve {
    fn default() -> Self {
        TurbineCurve {
            cut_in: 3.0,
            rated_speed: 12.5,
            cut_out: 25.0,
            rated_mw: 100.0,
        }
    }
}

/// Piecewise turbine output: zero outside `(cut_in, cut_out)`, a linear ramp
/// up to the rated speed and the rated power from there to cut-out.
pub fn speed_to_power(ws: f64, curve: &TurbineCurve) -> f64 {
    if ws <= curve.cut_in || ws >= curve.cut_out {
        0.0
    } else if ws < curve.rated_speed {
        curve.rated_mw * (ws - curve.cut_in) / (curve.rated_speed - curve.cut_in)
    } else {
        curve.rated_mw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualProfile {
    /// Normalized mean output per slot.
    pub values: Vec<f64>,
    pub retained_days: usize,
    pub excluded_days: usize,
}

/// Averages per-day turbine output, each day normalized by its first slot.
pub fn build_annual_profile(speed: &HalfHourlySeries, curve: &TurbineCurve) -> Result<AnnualProfile> {
    if speed.mode() != SeriesMode::Speed {
        return Err(Error::Argument("annual profile needs a speed-mode series".into()));
    }
    let mut sum = vec![0.0; SLOTS_PER_DAY];
    let (mut retained, mut excluded) = (0, 0);
    for day in speed.days() {
        let reference = speed_to_power(day.values[0], curve);
        if reference <= REFERENCE_FLOOR_MW {
            excluded += 1;
            continue;
        }
        for (acc, &ws) in sum.iter_mut().zip(&day.values) {
            *acc += speed_to_power(ws, curve) / reference;
        }
        retained += 1;
    }
    if retained < MIN_ANNUAL_DAYS {
        return Err(Error::InsufficientData {
            what: "annual profile retained days",
            needed: MIN_ANNUAL_DAYS,
            got: retained,
        });
    }
    if excluded > 0 {
        info!("annual profile: {excluded} days excluded, averaging over {retained}");
    }
    Ok(AnnualProfile {
        values: sum.into_iter().map(|s| s / retained as f64).collect(),
        retained_days: retained,
        excluded_days: excluded,
    })
}
