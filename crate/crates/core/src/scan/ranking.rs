use serde::{Deserialize, Serialize};

use super::{Criterion, Mode, ViolationReport};
use crate::{Error, Result, Season};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankGroup {
    Both,
    Case1Only,
    Case2Only,
}

impl RankGroup {
    pub fn name(self) -> &'static str {
        match self {
            RankGroup::Both => "both",
            RankGroup::Case1Only => "case1-only",
            RankGroup::Case2Only => "case2-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub bus: u32,
    pub wv: f64,
    pub alpha1: Option<usize>,
    pub pv1: f64,
    pub alpha2: Option<usize>,
    pub pv2: f64,
    pub group: RankGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityRanking {
    pub entries: Vec<RankEntry>,
}

/// Pooled violation counts of one case over `total` solved cases.
#[derive(Debug, Clone, Copy)]
pub struct CaseCounts<'a> {
    pub counts: &'a [usize],
    pub total: usize,
}

impl CaseCounts<'_> {
    fn pv(&self, i: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[i] as f64 / self.total as f64
        }
    }
}

/// Rank 1 for the most violations; ties go to the lower bus id. Buses
/// without violations get no rank.
fn alpha_ranks(buses: &[u32], counts: &[usize]) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..buses.len()).filter(|&i| counts[i] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(buses[a].cmp(&buses[b])));
    let mut ranks = vec![None; buses.len()];
    for (r, i) in order.into_iter().enumerate() {
        ranks[i] = Some(r + 1);
    }
    ranks
}

/// Rank-weighted vulnerability index; lower is more vulnerable.
pub fn vulnerability_index(alpha1: Option<usize>, pv1: f64, alpha2: Option<usize>, pv2: f64) -> f64 {
    alpha1.map_or(0.0, |a| a as f64 / pv1) + alpha2.map_or(0.0, |a| a as f64 / pv2)
}

/// Ranks buses from pooled counts of the relative-criterion mean-mode case
/// (`case1`) and the absolute-band min/max case (`case2`).
pub fn rank_counts(buses: &[u32], case1: CaseCounts, case2: CaseCounts) -> VulnerabilityRanking {
    let a1 = alpha_ranks(buses, case1.counts);
    let a2 = alpha_ranks(buses, case2.counts);
    let mut entries: Vec<RankEntry> = Vec::new();
    for (i, &bus) in buses.iter().enumerate() {
        let group = match (a1[i], a2[i]) {
            (Some(_), Some(_)) => RankGroup::Both,
            (Some(_), None) => RankGroup::Case1Only,
            (None, Some(_)) => RankGroup::Case2Only,
            (None, None) => continue,
        };
        let (pv1, pv2) = (case1.pv(i), case2.pv(i));
        entries.push(RankEntry {
            rank: 0,
            bus,
            wv: vulnerability_index(a1[i], pv1, a2[i], pv2),
            alpha1: a1[i],
            pv1,
            alpha2: a2[i],
            pv2,
            group,
        });
    }
    // single-case buses share one tier after the both-cases group
    entries.sort_by(|x, y| {
        (x.group != RankGroup::Both)
            .cmp(&(y.group != RankGroup::Both))
            .then(x.wv.total_cmp(&y.wv))
            .then(x.bus.cmp(&y.bus))
    });
    for (r, e) in entries.iter_mut().enumerate() {
        e.rank = r + 1;
    }
    VulnerabilityRanking { entries }
}

/// Pools a season-focused report into the two cases and ranks its buses.
pub fn rank_vulnerability(report: &ViolationReport) -> Result<VulnerabilityRanking> {
    let n = report.buses.len();
    let pool = |criterion: Criterion, modes: &[Mode]| -> Result<(Vec<usize>, usize)> {
        let mut counts = vec![0; n];
        let mut total = 0;
        for s in Season::ALL {
            for &m in modes {
                let t = report.tally(s.into(), criterion, m).ok_or_else(|| {
                    Error::Argument(format!("report has no {criterion}-criterion {m}-mode counts for {s}"))
                })?;
                total += t.total;
                for (c, x) in counts.iter_mut().zip(&t.counts) {
                    *c += x;
                }
            }
        }
        Ok((counts, total))
    };
    let (c1, t1) = pool(Criterion::Relative, &[Mode::Mean])?;
    let (c2, t2) = pool(Criterion::Absolute, &[Mode::Min, Mode::Max])?;
    Ok(rank_counts(
        &report.buses,
        CaseCounts { counts: &c1, total: t1 },
        CaseCounts { counts: &c2, total: t2 },
    ))
}
