use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScanConfig;
use crate::ingest::NetworkCase;
use crate::{Error, Result};

/// Random walks tried before a selection is declared infeasible.
pub const SELECTION_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindSelection {
    pub index: usize,
    /// Wind bus ids, ascending.
    pub buses: Vec<u32>,
    /// Wind capacity over total in-service capacity.
    pub penetration: f64,
}

/// Draws the wind-connected generator buses for selection `index`.
///
/// Every (seed, index, attempt) triple has its own ChaCha stream, so the
/// result does not depend on how many selections are drawn or in which
/// order. The slack bus never hosts wind.
pub fn select_wind_buses(case: &NetworkCase, config: &ScanConfig, index: usize) -> Result<WindSelection> {
    if config.wind_disabled() {
        return Ok(WindSelection {
            index,
            buses: Vec::new(),
            penetration: 0.0,
        });
    }
    let slack = case.buses[case.slack_index()].id;
    let mut capacity: BTreeMap<u32, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (_, g) in case.in_service_generators() {
        total += g.pmax;
        if g.bus != slack {
            *capacity.entry(g.bus).or_default() += g.pmax;
        }
    }
    if !(total > 0.0) {
        return Err(Error::Argument("case has no generating capacity".into()));
    }
    let (lo, hi) = (config.penetration - config.tolerance, config.penetration + config.tolerance);
    let candidates: Vec<(u32, f64)> = capacity.into_iter().collect();
    for attempt in 0..SELECTION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(((index as u64) << 16) | attempt as u64);
        let mut order = candidates.clone();
        order.shuffle(&mut rng);
        let (mut chosen, mut wind) = (Vec::new(), 0.0);
        for (bus, cap) in order {
            if (wind + cap) / total > hi {
                continue;
            }
            wind += cap;
            chosen.push(bus);
            if wind / total >= lo {
                chosen.sort_unstable();
                return Ok(WindSelection {
                    index,
                    buses: chosen,
                    penetration: wind / total,
                });
            }
        }
    }
    Err(Error::InfeasibleSelection {
        attempts: SELECTION_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::case::tests::two_bus;
    use crate::ingest::{BusType, Generator};

    fn gens(pmax: &[f64]) -> NetworkCase {
        let mut c = two_bus();
        c.buses[1].bus_type = BusType::Pv;
        c.generators[0].pmax = pmax[0];
        for &p in &pmax[1..] {
            c.generators.push(Generator {
                bus: 2,
                pmax: p,
                ..c.generators[0].clone()
            });
        }
        c
    }

    #[test]
    fn two_identical_generators_pick_one() {
        let c = gens(&[100.0, 100.0]);
        let s = select_wind_buses(&c, &ScanConfig::default(), 3).unwrap();
        assert_eq!(s.buses, vec![2]);
        assert_eq!(s.penetration, 0.5);
    }

    #[test]
    fn dominant_unit_is_infeasible() {
        let c = gens(&[10.0, 90.0]);
        assert!(matches!(
            select_wind_buses(&c, &ScanConfig::default(), 0),
            Err(Error::InfeasibleSelection { attempts: 1000 })
        ));
    }

    #[test]
    fn disabled_penetration_selects_nothing() {
        let cfg = ScanConfig {
            penetration: 0.0,
            tolerance: 0.0,
            ..ScanConfig::default()
        };
        assert!(select_wind_buses(&gens(&[1.0, 1.0]), &cfg, 0).unwrap().buses.is_empty());
    }
}
