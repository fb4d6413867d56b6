use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CASE_SCHEMA_VERSION: u32 = 1;
const CASE_FORMAT: &str = "gridseason.case";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusType {
    #[serde(rename = "PQ")]
    Pq,
    #[serde(rename = "PV")]
    Pv,
    Slack,
}

/// Powers are stored in MW / MVAr exactly as in the source file; the
/// solver divides by [`NetworkCase::base_mva`] when forming per-unit
/// injections. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    pub bus_type: BusType,
    pub pd: f64,
    pub qd: f64,
    /// Shunt conductance, MW consumed at 1 p.u. voltage.
    pub gs: f64,
    /// Shunt susceptance, MVAr injected at 1 p.u. voltage.
    pub bs: f64,
    pub vm: f64,
    pub va: f64,
    pub base_kv: f64,
    pub vmax: f64,
    pub vmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: u32,
    pub pg: f64,
    pub qg: f64,
    pub qmax: f64,
    pub qmin: f64,
    /// Voltage magnitude set point, p.u.
    pub vg: f64,
    pub pmax: f64,
    pub pmin: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, p.u.
    pub b: f64,
    pub rate_a: f64,
    /// Off-nominal tap ratio; 0 means a line (ratio 1).
    pub ratio: f64,
    /// Phase shift, degrees.
    pub angle: f64,
    pub in_service: bool,
}

/// Polynomial generation cost, coefficients from highest order down to the
/// constant term ($/h with P in MW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub coefficients: Vec<f64>,
}

impl CostCurve {
    pub fn quadratic(c2: f64, c1: f64, c0: f64) -> Self {
        CostCurve {
            coefficients: vec![c2, c1, c0],
        }
    }

    pub fn cost(&self, p: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, c| acc * p + c)
    }

    /// Derivative with respect to P.
    pub fn marginal(&self, p: f64) -> f64 {
        let n = self.coefficients.len();
        self.coefficients
            .iter()
            .take(n.saturating_sub(1))
            .enumerate()
            .fold(0.0, |acc, (i, c)| acc * p + c * (n - 1 - i) as f64)
    }

    /// (c2, c1) when the polynomial is at most quadratic.
    pub fn as_quadratic(&self) -> Option<(f64, f64)> {
        let c = &self.coefficients;
        match c.len() {
            0 | 1 => Some((0.0, 0.0)),
            2 => Some((0.0, c[0])),
            3 => Some((c[0], c[1])),
            _ if c[..c.len() - 3].iter().all(|x| *x == 0.0) => {
                let n = c.len();
                Some((c[n - 3], c[n - 2]))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
    /// Either empty or one curve per generator.
    #[serde(default)]
    pub costs: Vec<CostCurve>,
}

#[derive(Serialize, Deserialize)]
struct CaseDocument {
    format: String,
    version: u32,
    case: NetworkCase,
}

impl NetworkCase {
    pub fn bus_index(&self) -> HashMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.bus_type == BusType::Slack)
            .expect("validated case has a slack bus")
    }

    pub fn total_load_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.pd).sum()
    }

    pub fn in_service_generators(&self) -> impl Iterator<Item = (usize, &Generator)> {
        self.generators.iter().enumerate().filter(|(_, g)| g.in_service)
    }

    /// Checks every structural invariant of the case.
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(Error::Structure(format!("base MVA {} must be positive", self.base_mva)));
        }
        if self.buses.is_empty() {
            return Err(Error::EmptyInput("case has no buses".into()));
        }
        let index = self.bus_index();
        if index.len() != self.buses.len() {
            return Err(Error::Structure("duplicate bus ids".into()));
        }
        let slacks = self.buses.iter().filter(|b| b.bus_type == BusType::Slack).count();
        if slacks != 1 {
            return Err(Error::Structure(format!("expected exactly one slack bus, found {slacks}")));
        }
        for b in &self.buses {
            if !(b.vmin < b.vmax) {
                return Err(Error::Structure(format!("bus {}: Vmin must be below Vmax", b.id)));
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            if !index.contains_key(&g.bus) {
                return Err(Error::Reference(format!("generator {} on nonexistent bus {}", i + 1, g.bus)));
            }
            if g.pmin > g.pmax || g.qmin > g.qmax {
                return Err(Error::Structure(format!(
                    "generator {} at bus {}: limits out of order",
                    i + 1,
                    g.bus
                )));
            }
        }
        for (i, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(Error::Reference(format!(
                        "branch {} ({}-{}) references nonexistent bus {end}",
                        i + 1,
                        br.from,
                        br.to
                    )));
                }
            }
            if br.in_service && br.r == 0.0 && br.x == 0.0 {
                return Err(Error::Structure(format!("branch {} has zero impedance", i + 1)));
            }
        }
        if !self.costs.is_empty() && self.costs.len() != self.generators.len() {
            return Err(Error::Structure(format!(
                "{} cost curves for {} generators",
                self.costs.len(),
                self.generators.len()
            )));
        }

        let mut adjacency = vec![Vec::new(); self.buses.len()];
        for br in self.branches.iter().filter(|b| b.in_service) {
            let (f, t) = (index[&br.from], index[&br.to]);
            adjacency[f].push(t);
            adjacency[t].push(f);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([self.slack_index()]);
        seen[self.slack_index()] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let island: Vec<u32> = self
            .buses
            .iter()
            .zip(&seen)
            .filter(|(_, s)| !**s)
            .map(|(b, _)| b.id)
            .collect();
        if !island.is_empty() {
            return Err(Error::Connectivity { island });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<NetworkCase> {
        let doc: CaseDocument = serde_json::from_str(text)?;
        if doc.format != CASE_FORMAT {
            return Err(Error::Structure(format!("unexpected document format '{}'", doc.format)));
        }
        if doc.version != CASE_SCHEMA_VERSION {
            return Err(Error::Structure(format!("unsupported case schema version {}", doc.version)));
        }
        doc.case.validate()?;
        Ok(doc.case)
    }

    pub fn to_json(&self) -> String {
        let doc = CaseDocument {
            format: CASE_FORMAT.to_string(),
            version: CASE_SCHEMA_VERSION,
            case: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("case serializes")
    }

    /// Distinct buses hosting at least one in-service generator, in case order.
    pub fn generator_buses(&self) -> Vec<u32> {
        let mut seen = HashSet::new();
        self.in_service_generators()
            .filter(|(_, g)| seen.insert(g.bus))
            .map(|(_, g)| g.bus)
            .collect()
    }
}

/// Loads a MATPOWER `.m` case or a native `.json` case, chosen by extension.
pub fn import_case(path: &Path) -> Result<NetworkCase> {
    let text = super::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("json") => NetworkCase::from_json(&text),
        Some("m") => {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("case")
                .to_string();
            let mut case = super::parse_matpower(&text)?;
            if case.name.is_empty() {
                case.name = name;
            }
            Ok(case)
        }
        _ => Err(Error::Argument(format!(
            "{}: case files must end in .m or .json",
            path.display()
        ))),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn two_bus() -> NetworkCase {
        NetworkCase {
            name: "two-bus".into(),
            base_mva: 100.0,
            buses: vec![
                Bus { id: 1, bus_type: BusType::Slack, pd: 0.0, qd: 0.0, gs: 0.0, bs: 0.0, vm: 1.0, va: 0.0, base_kv: 138.0, vmax: 1.1, vmin: 0.9 },
                Bus { id: 2, bus_type: BusType::Pq, pd: 50.0, qd: 0.0, gs: 0.0, bs: 0.0, vm: 1.0, va: 0.0, base_kv: 138.0, vmax: 1.1, vmin: 0.9 },
            ],
            generators: vec![Generator { bus: 1, pg: 0.0, qg: 0.0, qmax: 999.0, qmin: -999.0, vg: 1.0, pmax: 200.0, pmin: 0.0, in_service: true }],
            branches: vec![Branch { from: 1, to: 2, r: 0.0, x: 0.1, b: 0.0, rate_a: 0.0, ratio: 0.0, angle: 0.0, in_service: true }],
            costs: vec![],
        }
    }

    #[test]
    fn minimal_case_is_valid() {
        two_bus().validate().unwrap();
    }

    #[test]
    fn dangling_branch_is_reference_error() {
        let mut c = two_bus();
        c.branches.push(Branch { from: 5, to: 99, ..c.branches[0].clone() });
        assert!(matches!(c.validate(), Err(Error::Reference(_))));
        let mut c = two_bus();
        c.generators[0].bus = 7;
        assert!(matches!(c.validate(), Err(Error::Reference(_))));
    }

    #[test]
    fn slack_count_and_islands() {
        let mut c = two_bus();
        c.buses[0].bus_type = BusType::Pv;
        assert!(matches!(c.validate(), Err(Error::Structure(_))));

        let mut c = two_bus();
        c.buses.push(Bus { id: 3, ..c.buses[1].clone() });
        match c.validate() {
            Err(Error::Connectivity { island }) => assert_eq!(island, vec![3]),
            other => panic!("{other:?}"),
        }
        let mut c = two_bus();
        c.branches[0].in_service = false;
        assert!(matches!(c.validate(), Err(Error::Connectivity { .. })));
    }

    #[test]
    fn generator_limits_must_be_ordered() {
        let mut c = two_bus();
        c.generators[0].pmin = 300.0;
        assert!(matches!(c.validate(), Err(Error::Structure(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut c = two_bus();
        c.branches[0].r = 0.1 + 0.2;
        c.buses[1].qd = 1.0 / 3.0;
        c.costs = vec![CostCurve::quadratic(0.0222222, 20.0, 0.0)];
        let back = NetworkCase::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn cost_polynomial_evaluation() {
        let c = CostCurve { coefficients: vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(c.cost(2.0), 8.0 + 8.0 + 6.0 + 4.0);
        assert_eq!(c.marginal(2.0), 12.0 + 8.0 + 3.0);
        assert_eq!(CostCurve::quadratic(0.5, 3.0, 1.0).as_quadratic(), Some((0.5, 3.0)));
        assert_eq!(c.as_quadratic(), None);
    }
}
