use serde::{Deserialize, Serialize};

use super::{Approach, Mode};
use crate::wind::{AnnualProfile, NormativeDayProfile};
use crate::{Error, Period, Result, Season, SLOTS_PER_DAY};

/// Below this a cross-season denominator counts as zero.
const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Wind profiles the factors are derived from.
#[derive(Debug, Clone, Copy)]
pub struct FactorInputs<'a> {
    /// One per season, any order.
    pub seasonal: &'a [NormativeDayProfile],
    pub annual: Option<&'a AnnualProfile>,
}

impl FactorInputs<'_> {
    fn season(&self, s: Season) -> Result<&NormativeDayProfile> {
        self.seasonal
            .iter()
            .find(|p| p.season == s)
            .ok_or_else(|| Error::Coverage(format!("no normative profile for {s}")))
    }
}

/// Numerator of the seasonal factor at slot `h`: normative output scaled
/// by the season's mean, max or min actual output.
fn numerator(p: &NormativeDayProfile, h: usize, mode: Mode) -> f64 {
    let s = &p.slots[h];
    match mode {
        Mode::Mean => s.normp * p.actual.mean_mw,
        Mode::Max => (s.normp + s.netmaxv) * p.actual.max_mw,
        Mode::Min => (s.normp - s.netminv).max(0.0) * p.actual.min_mw,
    }
}

/// Scale factor applied to wind units at slot `h` (zero-based).
pub fn scale_factor(inputs: &FactorInputs, period: Period, h: usize, mode: Mode, approach: Approach) -> Result<f64> {
    if h >= SLOTS_PER_DAY {
        return Err(Error::Argument(format!("slot {} out of range", h + 1)));
    }
    match approach {
        Approach::SeasonIndependent => {
            if mode != Mode::Mean {
                return Err(Error::Argument("the season-independent approach only has a mean mode".into()));
            }
            let annual = inputs
                .annual
                .ok_or_else(|| Error::Coverage("season-independent factors need the annual profile".into()))?;
            Ok(annual.values[h])
        }
        Approach::SeasonFocused => {
            let season = period
                .season()
                .ok_or_else(|| Error::Argument("season-focused factors need a season".into()))?;
            let mut all = [0.0; 4];
            for (v, s) in all.iter_mut().zip(Season::ALL) {
                *v = numerator(inputs.season(s)?, h, mode);
            }
            let denom = match mode {
                Mode::Mean => all.iter().sum::<f64>() / 4.0,
                Mode::Max => all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Mode::Min => all.iter().copied().fold(f64::INFINITY, f64::min),
            };
            if !(denom.abs() > DENOMINATOR_FLOOR) {
                return Err(Error::Degenerate(format!(
                    "{mode}-mode denominator is zero at slot {} ({season})",
                    h + 1
                )));
            }
            let num = numerator(inputs.season(season)?, h, mode);
            Ok(num / denom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub period: Period,
    pub mode: Mode,
    pub factors: Vec<f64>,
}

/// Wind scale factors for every (period, mode) an approach scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactorTable {
    pub approach: Approach,
    pub rows: Vec<FactorRow>,
}

impl ScaleFactorTable {
    pub fn build(inputs: &FactorInputs, approach: Approach, modes: &[Mode]) -> Result<ScaleFactorTable> {
        let mut rows = Vec::new();
        for period in approach.periods() {
            for &mode in modes {
                let factors = (0..SLOTS_PER_DAY)
                    .map(|h| scale_factor(inputs, period, h, mode, approach))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(bad) = factors.iter().position(|f| !(f.is_finite() && *f >= 0.0)) {
                    return Err(Error::Degenerate(format!(
                        "{mode}-mode factor {} at slot {} ({period}) is not a finite non-negative number",
                        factors[bad],
                        bad + 1
                    )));
                }
                rows.push(FactorRow { period, mode, factors });
            }
        }
        Ok(ScaleFactorTable { approach, rows })
    }

    /// Every factor equal to one; wind then leaves the dispatch untouched.
    pub fn unity(approach: Approach, modes: &[Mode]) -> ScaleFactorTable {
        let rows = approach
            .periods()
            .into_iter()
            .flat_map(|period| {
                modes.iter().map(move |&mode| FactorRow {
                    period,
                    mode,
                    factors: vec![1.0; SLOTS_PER_DAY],
                })
            })
            .collect();
        ScaleFactorTable { approach, rows }
    }

    pub fn get(&self, period: Period, mode: Mode) -> Option<&[f64]> {
        self.rows
            .iter()
            .find(|r| r.period == period && r.mode == mode)
            .map(|r| r.factors.as_slice())
    }
}
