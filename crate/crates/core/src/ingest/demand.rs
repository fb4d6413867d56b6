use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Season};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Residential,
    Commercial,
    Industrial,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::Residential, Sector::Commercial, Sector::Industrial];

    pub fn name(self) -> &'static str {
        match self {
            Sector::Residential => "residential",
            Sector::Commercial => "commercial",
            Sector::Industrial => "industrial",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sector {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "residential" => Ok(Sector::Residential),
            "commercial" => Ok(Sector::Commercial),
            "industrial" => Ok(Sector::Industrial),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub year: i32,
    pub month: u32,
    pub sector: Sector,
    pub mwh: f64,
}

/// Monthly sector energy, sorted by `(year, month, sector)` with unique keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonthlyEnergyTable {
    rows: Vec<EnergyRow>,
}

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    let next = NaiveDate::from_ymd_opt(ny, nm, 1).unwrap();
    let this = NaiveDate::from_ymd_opt(year, month, 1).unwrap();
    (next - this).num_days() as u32
}

impl MonthlyEnergyTable {
    pub fn rows(&self) -> &[EnergyRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.rows.iter().map(|r| r.year).collect();
        y.dedup();
        y
    }

    /// Average daily energy (MWh/day) of `sector` over the months of `season`
    /// in `years`: total monthly energy divided by the days in those months.
    pub fn seasonal_daily_energy(
        &self,
        sector: Sector,
        season: Season,
        years: std::ops::RangeInclusive<i32>,
    ) -> Result<f64> {
        let months = season.months();
        let (mut mwh, mut days) = (0.0, 0u32);
        for r in &self.rows {
            if r.sector == sector && years.contains(&r.year) && months.contains(&r.month) {
                mwh += r.mwh;
                days += days_in_month(r.year, r.month);
            }
        }
        if days == 0 {
            return Err(Error::Coverage(format!(
                "no {sector} energy for {season} in years {}..={}",
                years.start(),
                years.end()
            )));
        }
        Ok(mwh / days as f64)
    }

    /// Checks that every season has all three sectors for at least one year.
    pub fn check_coverage(&self) -> Result<()> {
        for season in Season::ALL {
            let months = season.months();
            let mut by_year: BTreeMap<i32, Vec<Sector>> = BTreeMap::new();
            for r in self.rows.iter().filter(|r| months.contains(&r.month)) {
                by_year.entry(r.year).or_default().push(r.sector);
            }
            let covered = by_year
                .values()
                .any(|s| Sector::ALL.iter().all(|x| s.contains(x)));
            if !covered {
                return Err(Error::Coverage(format!(
                    "{season} lacks one of the three sectors in every year"
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_demand_table(path: &Path) -> Result<MonthlyEnergyTable> {
    parse_demand_table_str(&super::read_to_string(path)?)
}

/// Parses a `year,month,sector,mwh` CSV.
pub fn parse_demand_table_str(text: &str) -> Result<MonthlyEnergyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let expected = ["year", "month", "sector", "mwh"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(Error::parse(1, "expected header 'year,month,sector,mwh'"));
    }
    let mut seen: BTreeMap<(i32, u32, Sector), (usize, EnergyRow)> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let year: i32 = rec[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("malformed year '{}'", &rec[0])))?;
        let month: u32 = rec[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("malformed month '{}'", &rec[1])))?;
        if !(1..=12).contains(&month) {
            return Err(Error::Range { line, what: "month", value: month as f64 });
        }
        let sector: Sector = rec[2].parse().map_err(|_| Error::Vocabulary {
            line,
            field: "sector",
            value: rec[2].to_string(),
            expected: "residential, commercial, industrial",
        })?;
        let mwh: f64 = rec[3]
            .parse()
            .map_err(|_| Error::parse(line, format!("malformed energy '{}'", &rec[3])))?;
        if !(mwh.is_finite() && mwh >= 0.0) {
            return Err(Error::Range { line, what: "energy", value: mwh });
        }
        let row = EnergyRow { year, month, sector, mwh };
        if let Some((first, _)) = seen.get(&(year, month, sector)) {
            return Err(Error::Conflict {
                key: format!("({year}, {month}, {sector})"),
                first_line: *first,
                second_line: line,
            });
        }
        seen.insert((year, month, sector), (line, row));
    }
    Ok(MonthlyEnergyTable {
        rows: seen.into_values().map(|(_, r)| r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_year() -> String {
        let mut s = String::from("year,month,sector,mwh\n");
        for sector in ["industrial", "commercial", "residential"] {
            for m in (1..=12).rev() {
                s.push_str(&format!("2008,{m},{sector},{}\n", 1000 * m));
            }
        }
        s
    }

    #[test]
    fn clean_table_is_sorted() {
        let t = parse_demand_table_str(&one_year()).unwrap();
        assert_eq!(t.len(), 36);
        assert_eq!(t.rows()[0].month, 1);
        assert_eq!(t.rows()[0].sector, Sector::Residential);
        t.check_coverage().unwrap();
    }

    #[test]
    fn duplicate_key_is_conflict() {
        let mut s = one_year();
        s.push_str("2008,6,residential,5\n");
        match parse_demand_table_str(&s) {
            Err(Error::Conflict { first_line, second_line, .. }) => {
                assert!(first_line < second_line);
                assert_eq!(second_line, 38);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_sector_and_negative_energy() {
        let s = "year,month,sector,mwh\n2008,1,agricultural,4\n";
        assert!(matches!(parse_demand_table_str(s), Err(Error::Vocabulary { .. })));
        let s = "year,month,sector,mwh\n2008,1,commercial,-4\n";
        assert!(matches!(parse_demand_table_str(s), Err(Error::Range { .. })));
    }

    #[test]
    fn seasonal_daily_energy_divides_by_calendar_days() {
        let t = parse_demand_table_str(&one_year()).unwrap();
        // summer 2008: (6000 + 7000 + 8000) / (30 + 31 + 31)
        let e = t
            .seasonal_daily_energy(Sector::Commercial, Season::Summer, 2008..=2008)
            .unwrap();
        assert!((e - 21000.0 / 92.0).abs() < 1e-12);
        // winter 2008 is a leap year: Jan + Feb(29) + Dec
        let e = t
            .seasonal_daily_energy(Sector::Residential, Season::Winter, 2008..=2008)
            .unwrap();
        assert!((e - 15000.0 / 91.0).abs() < 1e-12);
        assert!(t
            .seasonal_daily_energy(Sector::Residential, Season::Winter, 2009..=2010)
            .is_err());
    }
}
