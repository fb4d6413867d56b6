//! Markdown rendering of scan results.

use std::fmt::Write;

use crate::scan::{ComparisonRow, Criterion, Mode, VulnerabilityRanking, ViolationReport};
use crate::{Period, Season};

pub const TOP_BUSES: usize = 10;

/// What the summary is rendered from. Any part may be absent.
#[derive(Default, Clone, Copy)]
pub struct SummaryInputs<'a> {
    pub focused: Option<&'a ViolationReport>,
    pub independent: Option<&'a ViolationReport>,
    pub ranking: Option<&'a VulnerabilityRanking>,
    pub comparison: Option<&'a [ComparisonRow]>,
}

fn seasonal_table(out: &mut String, r: &ViolationReport, criterion: Criterion, mode: Mode) {
    let tallies: Vec<_> = Season::ALL
        .iter()
        .map(|&s| r.tally(s.into(), criterion, mode))
        .collect();
    if tallies.iter().all(Option::is_none) {
        return;
    }
    let cases: Vec<String> = tallies
        .iter()
        .map(|t| t.map_or("-".into(), |t| t.total.to_string()))
        .collect();
    let label = match criterion {
        Criterion::Relative => "deviation from base case",
        Criterion::Absolute => "outside the p.u. band",
    };
    let _ = writeln!(out, "### {mode} mode, {label}\n");
    let _ = writeln!(out, "Solved cases per season (winter/spring/summer/fall): {}\n", cases.join(" / "));
    let mut rows = Vec::new();
    for (i, bus) in r.buses.iter().enumerate() {
        let counts: Vec<usize> = tallies.iter().map(|t| t.map_or(0, |t| t.counts[i])).collect();
        if counts.iter().any(|&c| c > 0) {
            rows.push((bus, counts));
        }
    }
    if rows.is_empty() {
        let _ = writeln!(out, "No bus violated this criterion.\n");
        return;
    }
    out.push_str("| Bus | Winter | Spring | Summer | Fall | Total |\n|---:|---:|---:|---:|---:|---:|\n");
    for (bus, c) in rows {
        let total: usize = c.iter().sum();
        let _ = writeln!(out, "| {bus} | {} | {} | {} | {} | {total} |", c[0], c[1], c[2], c[3]);
    }
    out.push('\n');
}

fn annual_table(out: &mut String, r: &ViolationReport) {
    let _ = writeln!(out, "## Season-independent scan\n");
    out.push_str("| Bus | Criterion | Count | Cases |\n|---:|---|---:|---:|\n");
    let mut any = false;
    for c in Criterion::ALL {
        if let Some(t) = r.tally(Period::Annual, c, Mode::Mean) {
            for (i, bus) in r.buses.iter().enumerate() {
                if t.counts[i] > 0 {
                    any = true;
                    let _ = writeln!(out, "| {bus} | {c} | {} | {} |", t.counts[i], t.total);
                }
            }
        }
    }
    if !any {
        out.push_str("| - | - | 0 | - |\n");
    }
    out.push('\n');
}

pub fn render_summary(inputs: &SummaryInputs) -> String {
    let mut out = String::from("# Bus voltage violation summary\n\n");
    let meta = inputs.focused.or(inputs.independent).map(|r| &r.metadata);
    if let Some(m) = meta {
        let _ = writeln!(
            out,
            "Seed {}, {} wind selections at {:.0}% ± {:.0}% penetration. Relative threshold {:.0}%, band [{}, {}] p.u.\n",
            m.seed,
            m.selections,
            100.0 * m.penetration,
            100.0 * m.tolerance,
            100.0 * m.relative_threshold,
            m.band.0,
            m.band.1
        );
    }
    let diverged: usize = [inputs.focused, inputs.independent]
        .iter()
        .flatten()
        .map(|r| r.diverged())
        .sum();
    if diverged > 0 {
        let _ = writeln!(out, "{diverged} power flows did not converge and were left out of the counts.\n");
    }

    if let Some(r) = inputs.focused {
        out.push_str("## Season-focused scan\n\n");
        for c in Criterion::ALL {
            for m in Mode::ALL {
                seasonal_table(&mut out, r, c, m);
            }
        }
    }
    if let Some(r) = inputs.independent {
        annual_table(&mut out, r);
    }

    if let Some(rows) = inputs.comparison {
        let only: Vec<String> = rows.iter().filter(|r| r.focused_only).map(|r| r.bus.to_string()).collect();
        out.push_str("## Approach comparison\n\n");
        if only.is_empty() {
            out.push_str("Every bus flagged by the season-focused scan was also flagged season-independently.\n\n");
        } else {
            let _ = writeln!(out, "Flagged only by the season-focused scan: {}.\n", only.join(", "));
        }
    }

    if let Some(rank) = inputs.ranking {
        out.push_str("## Most vulnerable buses\n\n");
        if rank.entries.is_empty() {
            out.push_str("All scanned cases stayed within limits: no violations detected.\n");
        } else {
            out.push_str("| Rank | Bus | WV | Group |\n|---:|---:|---:|---|\n");
            for e in rank.entries.iter().take(TOP_BUSES) {
                let _ = writeln!(out, "| {} | {} | {:.3} | {} |", e.rank, e.bus, e.wv, e.group.name());
            }
            let top: Vec<String> = rank.entries.iter().take(TOP_BUSES).map(|e| e.bus.to_string()).collect();
            let _ = writeln!(out, "\nTop buses in order: {}.", top.join(", "));
        }
    }
    out
}
