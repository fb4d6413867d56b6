use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::PfOptions;
use crate::{Error, Execution, Period, Result, Season};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    /// One annual wind profile for every season.
    SeasonIndependent,
    /// Per-season normative wind profiles.
    SeasonFocused,
}

impl Approach {
    pub fn name(self) -> &'static str {
        match self {
            Approach::SeasonIndependent => "season-independent",
            Approach::SeasonFocused => "season-focused",
        }
    }

    pub fn periods(self) -> Vec<Period> {
        match self {
            Approach::SeasonIndependent => vec![Period::Annual],
            Approach::SeasonFocused => Season::ALL.iter().map(|&s| s.into()).collect(),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "season-independent" | "independent" => Ok(Approach::SeasonIndependent),
            "season-focused" | "focused" => Ok(Approach::SeasonFocused),
            _ => Err(format!("unknown approach '{s}'")),
        }
    }
}

/// Which wind statistic drives the scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mean,
    Min,
    Max,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Mean, Mode::Min, Mode::Max];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Mean => "mean",
            Mode::Min => "min",
            Mode::Max => "max",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mean" => Ok(Mode::Mean),
            "min" => Ok(Mode::Min),
            "max" => Ok(Mode::Max),
            _ => Err(format!("unknown mode '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// Deviation from the base-case voltage beyond a relative threshold.
    Relative,
    /// Voltage outside a fixed p.u. band.
    Absolute,
}

impl Criterion {
    pub const ALL: [Criterion; 2] = [Criterion::Relative, Criterion::Absolute];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Relative => "relative",
            Criterion::Absolute => "absolute",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "relative" => Ok(Criterion::Relative),
            "absolute" => Ok(Criterion::Absolute),
            _ => Err(format!("unknown criterion '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub selections: usize,
    /// Target wind share of generating capacity; 0 disables wind.
    pub penetration: f64,
    /// Half-width of the accepted penetration band.
    pub tolerance: f64,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub relative_threshold: f64,
    pub band: (f64, f64),
    pub modes: Vec<Mode>,
    pub approach: Approach,
    pub pf: PfOptions,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            selections: 100,
            penetration: 0.5,
            tolerance: 0.05,
            seed: 0,
            criteria: Criterion::ALL.to_vec(),
            relative_threshold: 0.05,
            band: (0.94, 1.06),
            modes: Mode::ALL.to_vec(),
            approach: Approach::SeasonFocused,
            pf: PfOptions::default(),
            execution: Execution::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.selections == 0 {
            return Err(Error::Argument("at least one wind selection is required".into()));
        }
        let disabled = self.penetration == 0.0;
        if !disabled && !(self.penetration > 0.0 && self.penetration < 1.0) {
            return Err(Error::Argument(format!("penetration {} must lie in (0, 1)", self.penetration)));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Argument(format!("penetration tolerance {} must be >= 0", self.tolerance)));
        }
        if !(self.band.0 < self.band.1) {
            return Err(Error::Argument(format!("voltage band {:?} must have lower < upper", self.band)));
        }
        if !(self.relative_threshold > 0.0) {
            return Err(Error::Argument("relative threshold must be positive".into()));
        }
        if self.modes.is_empty() || self.criteria.is_empty() {
            return Err(Error::Argument("at least one mode and one criterion are required".into()));
        }
        let mut c = self.criteria.clone();
        c.sort();
        c.dedup();
        if c.len() != self.criteria.len() {
            return Err(Error::Argument("a criterion is listed more than once".into()));
        }
        if self.approach == Approach::SeasonIndependent && self.modes.iter().any(|m| *m != Mode::Mean) {
            return Err(Error::Argument("the season-independent approach only has a mean mode".into()));
        }
        Ok(())
    }

    /// Modes actually run for an approach.
    pub fn modes_for(&self, approach: Approach) -> Vec<Mode> {
        match approach {
            Approach::SeasonIndependent => vec![Mode::Mean],
            Approach::SeasonFocused => {
                let mut m = self.modes.clone();
                m.sort();
                m.dedup();
                m
            }
        }
    }

    pub fn wind_disabled(&self) -> bool {
        self.penetration == 0.0
    }
}
