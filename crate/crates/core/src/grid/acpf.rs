//! Newton–Raphson AC power flow in polar coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sparse_lu::{self, min_degree_order, SymbolicLu};
use super::ybus::Ybus;
use crate::ingest::{BusType, NetworkCase};
use crate::{Error, Result};

/// Generator Q-limit violations smaller than this (MVAr) are ignored.
const Q_VIOLATION_MVAR: f64 = 5e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfOptions {
    /// Convergence threshold on the largest P/Q mismatch, p.u.
    pub tolerance: f64,
    /// Newton steps allowed per pass.
    pub max_iter: usize,
    pub enforce_q_limits: bool,
}

impl Default for PfOptions {
    fn default() -> Self {
        PfOptions {
            tolerance: 1e-8,
            max_iter: 30,
            enforce_q_limits: true,
        }
    }
}

/// Bus loads and generator set points driving a solve, in MW / MVAr.
#[derive(Debug, Clone, PartialEq)]
pub struct Injections {
    pub pd: Vec<f64>,
    pub qd: Vec<f64>,
    /// Active output per generator (ignored for the slack's first unit).
    pub pg: Vec<f64>,
    /// `Some(q)` fixes a generator's reactive output and removes it from
    /// voltage control.
    pub fixed_q: Vec<Option<f64>>,
}

impl Injections {
    /// The case's own loads and set points. Generators on PQ-typed buses
    /// hold their recorded Q.
    pub fn from_case(case: &NetworkCase) -> Injections {
        let index = case.bus_index();
        Injections {
            pd: case.buses.iter().map(|b| b.pd).collect(),
            qd: case.buses.iter().map(|b| b.qd).collect(),
            pg: case.generators.iter().map(|g| g.pg).collect(),
            fixed_q: case
                .generators
                .iter()
                .map(|g| (case.buses[index[&g.bus]].bus_type == BusType::Pq).then_some(g.qg))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfSolution {
    pub vm: Vec<f64>,
    /// Radians, slack at 0.
    pub va: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    /// Newton steps over all Q-limit passes.
    pub iterations: usize,
    pub max_mismatch: f64,
    pub converged: bool,
    /// Generators held at a reactive limit.
    pub q_limited: Vec<usize>,
}

/// Variable numbering for one assignment of bus kinds. Each non-slack bus
/// owns an angle variable; PQ buses also own a magnitude variable placed
/// right after it. Equation rows share the numbering (P with angle, Q with
/// magnitude).
#[derive(Debug, Clone)]
pub struct VarMap {
    pub theta: Vec<Option<usize>>,
    pub vmag: Vec<Option<usize>>,
    /// `(bus position, "angle" | "magnitude")` per variable.
    pub owner: Vec<(usize, &'static str)>,
    pub symbolic: SymbolicLu,
}

/// Case data prepared once and shared by any number of solves.
#[derive(Debug, Clone)]
pub struct PowerFlow<'a> {
    pub case: &'a NetworkCase,
    pub ybus: Ybus,
    bus_order: Vec<usize>,
    gen_bus: Vec<usize>,
    slack: usize,
}

impl<'a> PowerFlow<'a> {
    pub fn new(case: &'a NetworkCase) -> PowerFlow<'a> {
        let ybus = Ybus::build(case);
        let adj: Vec<Vec<usize>> = (0..ybus.n).map(|i| ybus.neighbors(i).collect()).collect();
        let index = case.bus_index();
        PowerFlow {
            bus_order: min_degree_order(&adj),
            gen_bus: case.generators.iter().map(|g| index[&g.bus]).collect(),
            slack: case.slack_index(),
            ybus,
            case,
        }
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn gen_bus(&self) -> &[usize] {
        &self.gen_bus
    }

    /// Whether generator `g` regulates its bus voltage.
    fn controls(&self, g: usize, fixed_q: &[Option<f64>]) -> bool {
        self.case.generators[g].in_service && fixed_q[g].is_none()
    }

    /// Slack stays slack; other buses are PV while an in-service generator
    /// without a fixed Q sits on a PV- or slack-typed bus.
    pub fn bus_kinds(&self, fixed_q: &[Option<f64>]) -> Vec<BusKind> {
        let mut kinds = vec![BusKind::Pq; self.ybus.n];
        for (g, &b) in self.gen_bus.iter().enumerate() {
            if self.controls(g, fixed_q) && self.case.buses[b].bus_type != BusType::Pq {
                kinds[b] = BusKind::Pv;
            }
        }
        kinds[self.slack] = BusKind::Slack;
        kinds
    }

    pub fn var_map(&self, kinds: &[BusKind]) -> VarMap {
        let n = self.ybus.n;
        let (mut theta, mut vmag) = (vec![None; n], vec![None; n]);
        let mut owner = Vec::new();
        for &b in &self.bus_order {
            if kinds[b] == BusKind::Slack {
                continue;
            }
            theta[b] = Some(owner.len());
            owner.push((b, "angle"));
            if kinds[b] == BusKind::Pq {
                vmag[b] = Some(owner.len());
                owner.push((b, "magnitude"));
            }
        }
        let mut adj = vec![Vec::new(); owner.len()];
        for (v, &(b, _)) in owner.iter().enumerate() {
            for (k, _) in self.ybus.row(b) {
                adj[v].extend(theta[k]);
                adj[v].extend(vmag[k]);
            }
        }
        VarMap {
            symbolic: SymbolicLu::new(&adj),
            theta,
            vmag,
            owner,
        }
    }

    /// Specified complex injection per bus, p.u. (Q meaningful on PQ buses only).
    pub fn specified(&self, inj: &Injections) -> Vec<Complex64> {
        let base = self.case.base_mva;
        let mut s: Vec<Complex64> = inj
            .pd
            .iter()
            .zip(&inj.qd)
            .map(|(p, q)| Complex64::new(-p, -q) / base)
            .collect();
        for (g, &b) in self.gen_bus.iter().enumerate() {
            if !self.case.generators[g].in_service {
                continue;
            }
            s[b].re += inj.pg[g] / base;
            if let Some(q) = inj.fixed_q[g] {
                s[b].im += q / base;
            }
        }
        s
    }

    fn voltages(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    }

    /// Mismatch vector `S(V) - S_spec` in variable order.
    pub fn mismatch(&self, map: &VarMap, spec: &[Complex64], vm: &[f64], va: &[f64]) -> Vec<f64> {
        let v = Self::voltages(vm, va);
        let cur = self.ybus.currents(&v);
        let mut f = vec![0.0; map.owner.len()];
        for b in 0..self.ybus.n {
            let ds = v[b] * cur[b].conj() - spec[b];
            if let Some(r) = map.theta[b] {
                f[r] = ds.re;
            }
            if let Some(r) = map.vmag[b] {
                f[r] = ds.im;
            }
        }
        f
    }

    /// Jacobian of [`PowerFlow::mismatch`] as `(row, col, value)` triplets.
    pub fn jacobian(&self, map: &VarMap, vm: &[f64], va: &[f64]) -> Vec<(usize, usize, f64)> {
        let v = Self::voltages(vm, va);
        let cur = self.ybus.currents(&v);
        let j = Complex64::i();
        let mut out = Vec::with_capacity(4 * self.ybus.val.len());
        for i in 0..self.ybus.n {
            let (rp, rq) = (map.theta[i], map.vmag[i]);
            if rp.is_none() && rq.is_none() {
                continue;
            }
            for (k, y) in self.ybus.row(i) {
                let ek = Complex64::from_polar(1.0, va[k]);
                let mut d_theta = -j * v[i] * (y * v[k]).conj();
                let mut d_vm = v[i] * (y * ek).conj();
                if i == k {
                    d_theta += j * v[i] * cur[i].conj();
                    d_vm += cur[i].conj() * ek;
                }
                for (col, d) in [(map.theta[k], d_theta), (map.vmag[k], d_vm)] {
                    let Some(c) = col else { continue };
                    if let Some(r) = rp {
                        out.push((r, c, d.re));
                    }
                    if let Some(r) = rq {
                        out.push((r, c, d.im));
                    }
                }
            }
        }
        out
    }

    /// Dense copy of the Jacobian, rows and columns in variable order.
    pub fn jacobian_dense(&self, map: &VarMap, vm: &[f64], va: &[f64]) -> Vec<Vec<f64>> {
        let m = map.owner.len();
        let mut d = vec![vec![0.0; m]; m];
        for (r, c, v) in self.jacobian(map, vm, va) {
            d[r][c] += v;
        }
        d
    }

    /// One Newton correction `dx = -J^-1 F`.
    pub fn newton_step(&self, map: &VarMap, spec: &[Complex64], vm: &[f64], va: &[f64]) -> Result<Vec<f64>> {
        let f = self.mismatch(map, spec, vm, va);
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        sparse_lu::solve(&map.symbolic, &self.jacobian(map, vm, va), &rhs).map_err(|p| {
            let (b, variable) = map.owner[p.0.min(map.owner.len().saturating_sub(1))];
            Error::SingularJacobian {
                pivot: p.0,
                bus: self.case.buses[b].id,
                variable,
            }
        })
    }

    /// Newton iterations for fixed bus kinds; updates `vm`/`va` in place.
    fn newton(
        &self,
        kinds: &[BusKind],
        spec: &[Complex64],
        vm: &mut [f64],
        va: &mut [f64],
        opts: &PfOptions,
        trace: &mut Vec<f64>,
    ) -> Result<(usize, f64)> {
        let map = self.var_map(kinds);
        let mut steps = 0;
        loop {
            let f = self.mismatch(&map, spec, vm, va);
            let norm = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            trace.push(norm);
            if !norm.is_finite() {
                return Err(Error::Diverged {
                    iterations: steps,
                    trace: trace.clone(),
                });
            }
            if norm < opts.tolerance {
                return Ok((steps, norm));
            }
            if steps >= opts.max_iter {
                return Err(Error::Diverged {
                    iterations: steps,
                    trace: trace.clone(),
                });
            }
            let dx = self.newton_step(&map, spec, vm, va)?;
            for b in 0..vm.len() {
                if let Some(c) = map.theta[b] {
                    va[b] += dx[c];
                }
                if let Some(c) = map.vmag[b] {
                    vm[b] += dx[c];
                }
            }
            steps += 1;
        }
    }

    /// Solves the power flow; `start` supplies a warm start.
    pub fn solve(&self, inj: &Injections, opts: &PfOptions, start: Option<&PfSolution>) -> Result<PfSolution> {
        let n = self.ybus.n;
        let ng = self.case.generators.len();
        if inj.pd.len() != n || inj.qd.len() != n || inj.pg.len() != ng || inj.fixed_q.len() != ng {
            return Err(Error::Argument("injection vectors do not match the case".into()));
        }
        let (mut vm, mut va) = match start {
            Some(s) => (s.vm.clone(), s.va.clone()),
            None => (vec![1.0; n], vec![0.0; n]),
        };
        va[self.slack] = 0.0;
        let mut fixed = inj.fixed_q.clone();
        let mut q_limited = Vec::new();
        let mut trace = Vec::new();
        let mut iterations = 0;
        loop {
            let kinds = self.bus_kinds(&fixed);
            for (g, &b) in self.gen_bus.iter().enumerate() {
                if kinds[b] != BusKind::Pq && self.controls(g, &fixed) {
                    vm[b] = self.case.generators[g].vg;
                }
            }
            let local = Injections {
                fixed_q: fixed.clone(),
                ..inj.clone()
            };
            let spec = self.specified(&local);
            let (steps, norm) = self
                .newton(&kinds, &spec, &mut vm, &mut va, opts, &mut trace)
                .map_err(|e| match e {
                    Error::Diverged { iterations: k, trace } => Error::Diverged {
                        iterations: iterations + k,
                        trace,
                    },
                    other => other,
                })?;
            iterations += steps;
            let (pg, qg) = self.generator_outputs(&kinds, &local, &vm, &va);

            let mut newly = Vec::new();
            if opts.enforce_q_limits {
                for (g, gen) in self.case.generators.iter().enumerate() {
                    if !self.controls(g, &fixed) || self.gen_bus[g] == self.slack {
                        continue;
                    }
                    if qg[g] > gen.qmax + Q_VIOLATION_MVAR {
                        newly.push((g, gen.qmax));
                    } else if qg[g] < gen.qmin - Q_VIOLATION_MVAR {
                        newly.push((g, gen.qmin));
                    }
                }
            }
            if newly.is_empty() {
                q_limited.sort_unstable();
                return Ok(PfSolution {
                    vm,
                    va,
                    pg,
                    qg,
                    iterations,
                    max_mismatch: norm,
                    converged: true,
                    q_limited,
                });
            }
            for (g, q) in newly {
                fixed[g] = Some(q);
                q_limited.push(g);
            }
        }
    }

    /// Generator P (slack unit balanced) and Q (shared by reactive range
    /// among a bus's regulating units).
    fn generator_outputs(&self, kinds: &[BusKind], inj: &Injections, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let base = self.case.base_mva;
        let v = Self::voltages(vm, va);
        let cur = self.ybus.currents(&v);
        let s: Vec<Complex64> = (0..v.len()).map(|b| v[b] * cur[b].conj() * base).collect();
        let gens = &self.case.generators;
        let mut pg: Vec<f64> = (0..gens.len()).map(|g| if gens[g].in_service { inj.pg[g] } else { 0.0 }).collect();
        let mut qg: Vec<f64> = (0..gens.len()).map(|g| if gens[g].in_service { inj.fixed_q[g].unwrap_or(0.0) } else { 0.0 }).collect();

        if let Some(first) = (0..gens.len()).find(|&g| gens[g].in_service && self.gen_bus[g] == self.slack) {
            let others: f64 = (0..gens.len())
                .filter(|&g| g != first && gens[g].in_service && self.gen_bus[g] == self.slack)
                .map(|g| inj.pg[g])
                .sum();
            pg[first] = s[self.slack].re + inj.pd[self.slack] - others;
        }
        for b in 0..v.len() {
            if kinds[b] == BusKind::Pq {
                continue;
            }
            let regs: Vec<usize> = (0..gens.len())
                .filter(|&g| self.gen_bus[g] == b && self.controls(g, &inj.fixed_q))
                .collect();
            if regs.is_empty() {
                continue;
            }
            let fixed: f64 = (0..gens.len())
                .filter(|&g| self.gen_bus[g] == b && gens[g].in_service)
                .filter_map(|g| inj.fixed_q[g])
                .sum();
            let total = s[b].im + inj.qd[b] - fixed;
            let ranges: Vec<f64> = regs.iter().map(|&g| gens[g].qmax - gens[g].qmin).collect();
            let rsum: f64 = ranges.iter().sum();
            for (i, &g) in regs.iter().enumerate() {
                qg[g] = if regs.len() == 1 {
                    total
                } else if rsum.is_finite() && rsum > 0.0 {
                    total * ranges[i] / rsum
                } else {
                    total / regs.len() as f64
                };
            }
        }
        (pg, qg)
    }
}

/// One-off solve with a flat start.
pub fn solve_acpf(case: &NetworkCase, inj: &Injections, opts: &PfOptions) -> Result<PfSolution> {
    PowerFlow::new(case).solve(inj, opts, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::case::tests::two_bus;

    #[test]
    fn two_bus_closed_form() {
        let case = two_bus();
        let sol = solve_acpf(&case, &Injections::from_case(&case), &PfOptions::default()).unwrap();
        // |V|^4 - |V|^2 + (P X)^2 = 0 for a lossless line and unity-pf load.
        let px: f64 = 0.5 * 0.1;
        let v2 = (1.0 + (1.0 - 4.0 * px * px).sqrt()) / 2.0;
        assert!((sol.vm[1] - v2.sqrt()).abs() < 1e-10, "{}", sol.vm[1]);
        // The angle satisfies P = V sin(-θ) / X.
        assert!((sol.va[1] - (-(px / v2.sqrt()).asin())).abs() < 1e-10);
        assert_eq!(sol.va[0], 0.0);
        assert!((sol.pg[0] - 50.0).abs() < 1e-6);
        assert!(sol.max_mismatch < 1e-8);
    }

    #[test]
    fn zero_load_is_flat() {
        let mut case = two_bus();
        case.buses[1].pd = 0.0;
        let sol = solve_acpf(&case, &Injections::from_case(&case), &PfOptions::default()).unwrap();
        assert!(sol.iterations <= 1);
        assert_eq!(sol.vm, vec![1.0, 1.0]);
        assert!(sol.va.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn heavy_load_diverges_with_trace() {
        let mut case = two_bus();
        case.buses[1].pd = 900.0;
        match solve_acpf(&case, &Injections::from_case(&case), &PfOptions::default()) {
            Err(Error::Diverged { iterations, trace }) => {
                assert!(iterations <= 30);
                assert_eq!(trace.len(), iterations + 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gradient_check_two_bus() {
        let case = two_bus();
        let pf = PowerFlow::new(&case);
        let inj = Injections::from_case(&case);
        let kinds = pf.bus_kinds(&inj.fixed_q);
        let map = pf.var_map(&kinds);
        let spec = pf.specified(&inj);
        let (vm, va) = (vec![1.0, 0.97], vec![0.0, -0.06]);
        let jd = pf.jacobian_dense(&map, &vm, &va);
        let h = 1e-6;
        for (c, &(b, what)) in map.owner.iter().enumerate() {
            let bump = |d: f64| {
                let (mut m, mut a) = (vm.clone(), va.clone());
                if what == "angle" {
                    a[b] += d;
                } else {
                    m[b] += d;
                }
                pf.mismatch(&map, &spec, &m, &a)
            };
            let (fp, fm) = (bump(h), bump(-h));
            for r in 0..map.owner.len() {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - jd[r][c]).abs() < 1e-6 * jd[r][c].abs().max(1.0));
            }
        }
    }
}
