use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use crate::ingest::{read_to_string, Sector};
use crate::{Error, Result, Season, SLOTS_PER_DAY};

/// Daily load curve of one sector in one season, as a fraction of its peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorShape {
    pub sector: Sector,
    pub season: Season,
    pub values: Vec<f64>,
}

impl SectorShape {
    /// Validates a 48-slot shape whose maximum is exactly 1 and whose values are positive.
    pub fn new(sector: Sector, season: Season, values: Vec<f64>) -> Result<Self> {
        if values.len() != SLOTS_PER_DAY {
            return Err(Error::Structure(format!(
                "{sector} {season} shape has {} slots, need {SLOTS_PER_DAY}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Degenerate(format!("{sector} {season} shape has non-positive value {v}")));
        }
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        if max != 1.0 {
            return Err(Error::Degenerate(format!("{sector} {season} shape peaks at {max}, not 1")));
        }
        Ok(SectorShape { sector, season, values })
    }

    /// Divides by the maximum so the peak is exactly 1.
    pub fn normalized(sector: Sector, season: Season, values: Vec<f64>) -> Result<Self> {
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        if !(max > 0.0 && max.is_finite()) {
            return Err(Error::Degenerate(format!("{sector} {season} shape has no positive peak")));
        }
        SectorShape::new(sector, season, values.into_iter().map(|v| v / max).collect())
    }

    /// Area under the curve in peak-normalized hours.
    pub fn integral_hours(&self) -> f64 {
        self.values.iter().sum::<f64>() * 0.5
    }
}

/// Shapes keyed by sector and season.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShapeSet {
    shapes: BTreeMap<(Sector, Season), SectorShape>,
}

impl ShapeSet {
    pub fn insert(&mut self, shape: SectorShape) {
        self.shapes.insert((shape.sector, shape.season), shape);
    }

    pub fn get(&self, sector: Sector, season: Season) -> Result<&SectorShape> {
        self.shapes
            .get(&(sector, season))
            .ok_or_else(|| Error::Coverage(format!("missing {sector} load shape for {season}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &SectorShape> {
        self.shapes.values()
    }

    /// Later sets override earlier ones key by key.
    pub fn merge(mut self, other: ShapeSet) -> ShapeSet {
        self.shapes.extend(other.shapes);
        self
    }
}

#[derive(Debug, Deserialize)]
struct ShapeRow {
    sector: String,
    season: String,
    slot: usize,
    value: f64,
}

pub fn parse_shapes(path: &Path) -> Result<ShapeSet> {
    parse_shapes_str(&read_to_string(path)?)
}

/// Reads `sector,season,slot,value` rows; each (sector, season) needs all 48 slots.
pub fn parse_shapes_str(text: &str) -> Result<ShapeSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["sector", "season", "slot", "value"] {
        return Err(Error::parse(1, "shape header must be sector,season,slot,value"));
    }
    let mut raw: BTreeMap<(Sector, Season), Vec<Option<f64>>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<ShapeRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        let sector: Sector = row.sector.parse().map_err(|_| Error::Vocabulary {
            line,
            field: "sector",
            value: row.sector.clone(),
            expected: "residential, commercial, industrial",
        })?;
        let season: Season = row.season.parse().map_err(|_| Error::Vocabulary {
            line,
            field: "season",
            value: row.season.clone(),
            expected: "winter, spring, summer, fall",
        })?;
        if !(1..=SLOTS_PER_DAY).contains(&row.slot) {
            return Err(Error::Range {
                line,
                what: "slot",
                value: row.slot as f64,
            });
        }
        let slots = raw.entry((sector, season)).or_insert_with(|| vec![None; SLOTS_PER_DAY]);
        if slots[row.slot - 1].replace(row.value).is_some() {
            return Err(Error::parse(line, format!("duplicate slot {} for {sector} {season}", row.slot)));
        }
    }
    let mut set = ShapeSet::default();
    for ((sector, season), slots) in raw {
        let values: Option<Vec<f64>> = slots.into_iter().collect();
        let values = values.ok_or_else(|| Error::Coverage(format!("{sector} {season} shape is missing slots")))?;
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        if max != 1.0 {
            info!("{sector} {season} shape rescaled to unit peak (was {max})");
        }
        set.insert(SectorShape::normalized(sector, season, values)?);
    }
    Ok(set)
}

/// Seasonal passive-to-active load ratios used to carry summer commercial
/// and industrial curves into the other seasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRatioSet {
    pub winter: f64,
    pub spring: f64,
    pub summer: f64,
    pub fall: f64,
}

impl Default for LoadRatioSet {
    fn default() -> Self {
        LoadRatioSet::uniform(0.2)
    }
}

impl LoadRatioSet {
    pub fn uniform(lr: f64) -> Self {
        LoadRatioSet {
            winter: lr,
            spring: lr,
            summer: lr,
            fall: lr,
        }
    }

    pub fn get(&self, season: Season) -> f64 {
        match season {
            Season::Winter => self.winter,
            Season::Spring => self.spring,
            Season::Summer => self.summer,
            Season::Fall => self.fall,
        }
    }

    pub fn set(&mut self, season: Season, lr: f64) {
        match season {
            Season::Winter => self.winter = lr,
            Season::Spring => self.spring = lr,
            Season::Summer => self.summer = lr,
            Season::Fall => self.fall = lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in Season::ALL {
            let lr = self.get(s);
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::Argument(format!("load ratio for {s} must be finite and >= 0, got {lr}")));
            }
        }
        Ok(())
    }
}

pub fn parse_load_ratios(path: &Path) -> Result<LoadRatioSet> {
    parse_load_ratios_str(&read_to_string(path)?)
}

/// Reads `season,lr` rows; seasons not listed keep the default.
pub fn parse_load_ratios_str(text: &str) -> Result<LoadRatioSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["season", "lr"] {
        return Err(Error::parse(1, "load ratio header must be season,lr"));
    }
    let mut set = LoadRatioSet::default();
    for (i, row) in rdr.deserialize::<(String, f64)>().enumerate() {
        let line = i + 2;
        let (season, lr) = row.map_err(|e| Error::parse(line, e.to_string()))?;
        let season: Season = season.parse().map_err(|_| Error::Vocabulary {
            line,
            field: "season",
            value: season.clone(),
            expected: "winter, spring, summer, fall",
        })?;
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(Error::Range { line, what: "load ratio", value: lr });
        }
        set.set(season, lr);
    }
    Ok(set)
}
