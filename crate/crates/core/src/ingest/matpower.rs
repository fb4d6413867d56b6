//! Read-only importer for MATPOWER case text (`mpc.bus`, `mpc.gen`,
//! `mpc.branch`, `mpc.gencost`, `mpc.baseMVA`). Other blocks are skipped.

use log::warn;

use super::case::{Branch, Bus, BusType, CostCurve, Generator, NetworkCase};
use crate::{Error, Result};

struct Block {
    name: String,
    line: usize,
    body: String,
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| match l.find('%') {
            Some(i) => &l[..i],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn line_of(text: &str, pos: usize) -> usize {
    text[..pos].bytes().filter(|&b| b == b'\n').count() + 1
}

fn blocks(text: &str) -> Result<Vec<Block>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(found) = text[pos..].find("mpc.") {
        let start = pos + found;
        let after = start + 4;
        let name_len = text[after..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(text.len() - after);
        let name = text[after..after + name_len].to_string();
        let line = line_of(text, start);
        let rest = &text[after + name_len..];
        let Some(eq) = rest.find('=') else {
            return Err(Error::parse(line, format!("expected '=' after mpc.{name}")));
        };
        let value = rest[eq + 1..].trim_start();
        let value_start = text.len() - value.len();
        let (body, consumed) = match value.chars().next() {
            Some(open @ ('[' | '{')) => {
                let close = if open == '[' { ']' } else { '}' };
                let end = value
                    .find(close)
                    .ok_or_else(|| Error::parse(line, format!("unterminated mpc.{name}")))?;
                (value[1..end].to_string(), end + 1)
            }
            _ => {
                let end = value.find(';').unwrap_or(value.len());
                (value[..end].to_string(), end)
            }
        };
        out.push(Block { name, line, body });
        pos = value_start + consumed;
    }
    Ok(out)
}

fn matrix(block: &Block, min_cols: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut line = block.line;
    for raw_line in block.body.split('\n') {
        for raw_row in raw_line.split(';') {
            let cells: Vec<&str> = raw_row
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cells.is_empty() {
                continue;
            }
            let row = cells
                .iter()
                .map(|c| match *c {
                    "Inf" | "inf" => Ok(f64::INFINITY),
                    "-Inf" | "-inf" => Ok(f64::NEG_INFINITY),
                    _ => c.parse::<f64>(),
                })
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| Error::parse(line, format!("malformed number in mpc.{}", block.name)))?;
            if row.len() < min_cols {
                return Err(Error::parse(
                    line,
                    format!("mpc.{} row has {} columns, need {min_cols}", block.name, row.len()),
                ));
            }
            rows.push(row);
        }
        line += 1;
    }
    Ok(rows)
}

fn bus_id(v: f64, line: usize) -> Result<u32> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(Error::parse(line, format!("invalid bus number {v}")))
    }
}

/// Parses MATPOWER case text and validates the result.
pub fn parse_matpower(text: &str) -> Result<NetworkCase> {
    let text = strip_comments(text);
    let mut case = NetworkCase {
        name: String::new(),
        base_mva: 0.0,
        buses: Vec::new(),
        generators: Vec::new(),
        branches: Vec::new(),
        costs: Vec::new(),
    };
    let mut have = (false, false, false, false);
    let mut gencost_rows = Vec::new();

    if let Some(l) = text.lines().find(|l| l.trim_start().starts_with("function")) {
        if let Some(name) = l.split('=').nth(1) {
            case.name = name.trim().to_string();
        }
    }

    for block in blocks(&text)? {
        match block.name.as_str() {
            "baseMVA" => {
                case.base_mva = block
                    .body
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(block.line, "malformed baseMVA"))?;
                have.0 = true;
            }
            "bus" => {
                for row in matrix(&block, 13)? {
                    let bus_type = match row[1] as i64 {
                        1 => BusType::Pq,
                        2 => BusType::Pv,
                        3 => BusType::Slack,
                        t => {
                            return Err(Error::Structure(format!(
                                "bus {}: unsupported bus type {t}",
                                row[0]
                            )))
                        }
                    };
                    case.buses.push(Bus {
                        id: bus_id(row[0], block.line)?,
                        bus_type,
                        pd: row[2],
                        qd: row[3],
                        gs: row[4],
                        bs: row[5],
                        vm: row[7],
                        va: row[8],
                        base_kv: row[9],
                        vmax: row[11],
                        vmin: row[12],
                    });
                }
                have.1 = true;
            }
            "gen" => {
                for row in matrix(&block, 10)? {
                    case.generators.push(Generator {
                        bus: bus_id(row[0], block.line)?,
                        pg: row[1],
                        qg: row[2],
                        qmax: row[3],
                        qmin: row[4],
                        vg: row[5],
                        in_service: row[7] > 0.0,
                        pmax: row[8],
                        pmin: row[9],
                    });
                }
                have.2 = true;
            }
            "branch" => {
                for row in matrix(&block, 11)? {
                    case.branches.push(Branch {
                        from: bus_id(row[0], block.line)?,
                        to: bus_id(row[1], block.line)?,
                        r: row[2],
                        x: row[3],
                        b: row[4],
                        rate_a: row[5],
                        ratio: row[8],
                        angle: row[9],
                        in_service: row[10] > 0.0,
                    });
                }
                have.3 = true;
            }
            "gencost" => {
                for row in matrix(&block, 4)? {
                    if row[0] as i64 != 2 {
                        return Err(Error::Structure(
                            "only polynomial (model 2) generator costs are supported".into(),
                        ));
                    }
                    let n = row[3] as usize;
                    if row.len() < 4 + n {
                        return Err(Error::parse(block.line, "gencost row shorter than its order"));
                    }
                    gencost_rows.push(CostCurve {
                        coefficients: row[4..4 + n].to_vec(),
                    });
                }
            }
            "version" => {}
            other => warn!("ignoring MATPOWER block mpc.{other}"),
        }
    }
    if !have.0 || !have.1 || !have.2 || !have.3 {
        return Err(Error::Structure(
            "case needs mpc.baseMVA, mpc.bus, mpc.gen and mpc.branch".into(),
        ));
    }
    // A second set of rows, when present, holds reactive costs.
    gencost_rows.truncate(case.generators.len());
    case.costs = gencost_rows;
    case.validate()?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r"
function mpc = twobus
mpc.version = '2';
mpc.baseMVA = 100;
% bus data
mpc.bus = [
    1 3 0  0 0 0 1 1 0 138 1 1.1 0.9;
    2 1 50 0 0 0 1 1 0 138 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 999 -999 1 100 1 200 0;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
    2 0 0 3 0.01 40 0;
];
mpc.bus_name = {
    'one';
    'two';
};
";

    #[test]
    fn parses_minimal_case() {
        let c = parse_matpower(TWO_BUS).unwrap();
        assert_eq!(c.name, "twobus");
        assert_eq!(c.buses.len(), 2);
        assert_eq!(c.buses[0].bus_type, BusType::Slack);
        assert_eq!(c.generators[0].pmax, 200.0);
        assert_eq!(c.branches[0].x, 0.1);
        assert_eq!(c.costs[0].coefficients, vec![0.01, 40.0, 0.0]);
    }

    #[test]
    fn dangling_branch_is_rejected() {
        let text = TWO_BUS.replace("1 2 0 0.1", "5 99 0 0.1");
        assert!(matches!(parse_matpower(&text), Err(Error::Reference(_))));
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = TWO_BUS.replace("2 1 50 0", "2 1 5x0 0");
        match parse_matpower(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_block_is_structural() {
        let text = TWO_BUS.replace("mpc.gen =", "mpc.gens =");
        assert!(matches!(parse_matpower(&text), Err(Error::Structure(_))));
    }
}
