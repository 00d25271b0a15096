//! Exact solvers for small instances.
//!
//! Both searches branch on one server at a time over a finite radius menu
//! that provably contains an optimum, pruning with the partial cost plus an
//! admissible bound on what the unassigned servers must still pay.

use std::borrow::Cow;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cover::{solve_with, SolveOptions};
use crate::error::{Error, Result};
use crate::geometry::Norm;
use crate::model::{cost, Instance, RadiusAssignment};
use crate::outer_cover::NeighborTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: u64,
    pub max_time: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_nodes: 50_000_000, max_time: Some(Duration::from_secs(60)) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cost: f64,
    pub radii: RadiusAssignment,
    pub nodes: u64,
    pub fingerprint: String,
}

struct Budget {
    limits: Limits,
    start: Instant,
    nodes: u64,
}

impl Budget {
    fn new(limits: Limits) -> Self {
        Budget { limits, start: Instant::now(), nodes: 0 }
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        let out_of_time = self.nodes % 4096 == 0
            && self.limits.max_time.is_some_and(|t| self.start.elapsed() > t);
        if self.nodes > self.limits.max_nodes || out_of_time {
            return Err(Error::BudgetExceeded { nodes: self.nodes });
        }
        Ok(())
    }
}

fn pow(r: f64, alpha: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.powf(alpha)
    }
}

struct McmcSearch<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    menus: Vec<Vec<f64>>,
    /// `dpow[i][j] = dist(y_i, x_j)^α`
    dpow: Vec<Vec<f64>>,
    counts: Vec<usize>,
    current: Vec<f64>,
    best_cost: f64,
    best: Option<Vec<f64>>,
    budget: Budget,
}

impl McmcSearch<'_> {
    /// Admissible bound on the cost still to pay from servers `order[depth..]`:
    /// a client missing `m` disks needs at least the `m` cheapest reaches.
    fn residual_bound(&self, depth: usize) -> Option<f64> {
        let left = self.order.len() - depth;
        let mut bound = 0.0f64;
        let mut reach = Vec::with_capacity(left);
        for j in 0..self.inst.num_clients() {
            let need = self.inst.kappa[j].saturating_sub(self.counts[j]);
            if need == 0 {
                continue;
            }
            if need > left {
                return None;
            }
            reach.clear();
            reach.extend(self.order[depth..].iter().map(|&i| self.dpow[i][j]));
            reach.sort_by(f64::total_cmp);
            bound = bound.max(reach[..need].iter().sum());
        }
        Some(bound)
    }

    fn search(&mut self, depth: usize, partial: f64) -> Result<()> {
        self.budget.tick()?;
        let Some(rest) = self.residual_bound(depth) else {
            return Ok(());
        };
        if partial + rest >= self.best_cost {
            return Ok(());
        }
        if depth == self.order.len() {
            self.best_cost = partial;
            self.best = Some(self.current.clone());
            return Ok(());
        }
        let i = self.order[depth];
        let menu = std::mem::take(&mut self.menus[i]);
        for &r in &menu {
            let c = partial + pow(r, self.inst.alpha);
            if c >= self.best_cost {
                break;
            }
            let covered: Vec<usize> =
                (0..self.inst.num_clients()).filter(|&j| self.inst.server_client_dist(i, j) <= r).collect();
            for &j in &covered {
                self.counts[j] += 1;
            }
            self.current[i] = r;
            let res = self.search(depth + 1, c);
            for &j in &covered {
                self.counts[j] -= 1;
            }
            self.current[i] = 0.0;
            if let Err(e) = res {
                self.menus[i] = menu;
                return Err(e);
            }
        }
        self.menus[i] = menu;
        Ok(())
    }
}

/// Minimum-cost assignment under the instance norm.
pub fn exact_mcmc(inst: &Instance, limits: Limits) -> Result<OracleReport> {
    inst.ensure_valid()?;
    let n = inst.num_servers();
    let m = inst.num_clients();
    let menus = inst.candidate_radii().0;
    let dpow: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|j| pow(inst.server_client_dist(i, j), inst.alpha)).collect())
        .collect();

    // Branch first on servers that appear in many clients' κ-nearest sets.
    let table = NeighborTable::new(inst);
    let mut weight = vec![0usize; n];
    for j in 0..m {
        for &i in table.nearest(j, inst.kappa[j]) {
            weight[i] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weight[b].cmp(&weight[a]).then(a.cmp(&b)));

    let mut s = McmcSearch {
        inst,
        order,
        menus,
        dpow,
        counts: vec![0; m],
        current: vec![0.0; n],
        best_cost: f64::INFINITY,
        best: None,
        budget: Budget::new(limits),
    };
    s.search(0, 0.0)?;
    let radii = s
        .best
        .ok_or_else(|| Error::Invariant("exact search found no feasible assignment".into()))?;
    let radii = RadiusAssignment(radii);
    Ok(OracleReport {
        cost: cost(&radii, inst.alpha),
        radii,
        nodes: s.budget.nodes,
        fingerprint: inst.fingerprint(),
    })
}

struct OuterSearch {
    alpha: f64,
    n_clients: usize,
    /// `rmin[i][c]` for local client `c`.
    rmin: Vec<Vec<f64>>,
    menus: Vec<Vec<f64>>,
    served: Vec<u32>,
    current: Vec<f64>,
    best_cost: f64,
    best: Option<Vec<f64>>,
    budget: Budget,
}

impl OuterSearch {
    fn residual_bound(&self, server: usize) -> f64 {
        let mut bound = 0.0f64;
        for c in 0..self.n_clients {
            if self.served[c] == 0 {
                let cheapest = (server..self.rmin.len())
                    .map(|i| pow(self.rmin[i][c], self.alpha))
                    .fold(f64::INFINITY, f64::min);
                bound = bound.max(cheapest);
            }
        }
        bound
    }

    fn search(&mut self, server: usize, partial: f64) -> Result<()> {
        self.budget.tick()?;
        if partial + self.residual_bound(server) >= self.best_cost {
            return Ok(());
        }
        if server == self.rmin.len() {
            self.best_cost = partial;
            self.best = Some(self.current.clone());
            return Ok(());
        }
        let menu = std::mem::take(&mut self.menus[server]);
        for &r in &menu {
            let c = partial + pow(r, self.alpha);
            if c >= self.best_cost {
                break;
            }
            let hit: Vec<usize> = (0..self.n_clients).filter(|&k| self.rmin[server][k] <= r).collect();
            for &k in &hit {
                self.served[k] += 1;
            }
            self.current[server] = r;
            let res = self.search(server + 1, c);
            for &k in &hit {
                self.served[k] -= 1;
            }
            self.current[server] = 0.0;
            if let Err(e) = res {
                self.menus[server] = menu;
                return Err(e);
            }
        }
        self.menus[server] = menu;
        Ok(())
    }
}

/// Minimum-cost outer cover of `clients` under demands `kappa`, in L∞.
///
/// A disk at `y` serves `x` iff its radius is at least
/// `max(dist(y, x), dist(x, y^κ(x)))`, so each server's menu is `{0}` plus
/// those values.
pub fn exact_outer_cover(inst: &Instance, kappa: &[usize], clients: &[usize], limits: Limits) -> Result<OracleReport> {
    let inst: Cow<'_, Instance> = if inst.norm == Norm::Linf {
        Cow::Borrowed(inst)
    } else {
        Cow::Owned(inst.with_norm(Norm::Linf))
    };
    for &j in clients {
        if j >= inst.num_clients() || kappa[j] == 0 || kappa[j] > inst.num_servers() {
            return Err(Error::invalid(format!("client {j} cannot be outer-covered")));
        }
    }
    let table = NeighborTable::new(&inst);
    let rmin: Vec<Vec<f64>> = (0..inst.num_servers())
        .map(|i| {
            clients
                .iter()
                .map(|&j| inst.server_client_dist(i, j).max(table.kth_dist(j, kappa[j])))
                .collect()
        })
        .collect();
    let menus = rmin
        .iter()
        .map(|row| {
            let mut m: Vec<f64> = std::iter::once(0.0).chain(row.iter().copied()).collect();
            m.sort_by(f64::total_cmp);
            m.dedup();
            m
        })
        .collect();
    let mut s = OuterSearch {
        alpha: inst.alpha,
        n_clients: clients.len(),
        rmin,
        menus,
        served: vec![0; clients.len()],
        current: vec![0.0; inst.num_servers()],
        best_cost: f64::INFINITY,
        best: None,
        budget: Budget::new(limits),
    };
    s.search(0, 0.0)?;
    let radii = RadiusAssignment(
        s.best.ok_or_else(|| Error::Invariant("exact outer-cover search found nothing".into()))?,
    );
    Ok(OracleReport {
        cost: cost(&radii, inst.alpha),
        radii,
        nodes: s.budget.nodes,
        fingerprint: inst.fingerprint(),
    })
}

/// Worst-case guarantee of the level algorithm against the optimum:
/// `2d · 27^α` in L∞ and `2d · (27√d)^α` in L2.
pub fn ratio_bound(dim: usize, alpha: f64, norm: Norm) -> f64 {
    let base = match norm {
        Norm::Linf => 27.0,
        Norm::L2 => 27.0 * (dim as f64).sqrt(),
    };
    (2 * dim) as f64 * base.powf(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub alg_cost: f64,
    pub oracle_cost: f64,
    /// `alg_cost / oracle_cost`; defined as 1 when both are 0.
    pub ratio: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub fingerprint: String,
}

/// `alg / opt` where 0/0 counts as 1.
pub fn ratio(alg: f64, opt: f64) -> f64 {
    if opt == 0.0 {
        if alg == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        alg / opt
    }
}

/// Solves `inst` (without shrinking) and compares against the exact optimum.
pub fn ratio_report(inst: &Instance, limits: Limits) -> Result<RatioReport> {
    let opts = SolveOptions { shrink: false, ..SolveOptions::default() };
    let (radii, _) = solve_with(inst, &opts)?;
    let alg_cost = cost(&radii, inst.alpha);
    let oracle = exact_mcmc(inst, limits)?;
    let ratio = ratio(alg_cost, oracle.cost);
    let bound = ratio_bound(inst.dim, inst.alpha, inst.norm);
    Ok(RatioReport {
        alg_cost,
        oracle_cost: oracle.cost,
        ratio,
        bound,
        satisfied: ratio <= bound,
        fingerprint: oracle.fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn e1(k: usize) -> Instance {
        Instance {
            dim: 2,
            servers: vec![Point::new([0.0, 0.0]), Point::new([4.0, 0.0])],
            clients: vec![Point::new([1.0, 0.0])],
            kappa: vec![k],
            alpha: 1.0,
            norm: Norm::Linf,
        }
    }

    #[test]
    fn exact_worked_example() {
        let rep = exact_mcmc(&e1(2), Limits::default()).unwrap();
        assert_eq!(rep.cost, 4.0);
        assert_eq!(rep.radii.0, vec![1.0, 3.0]);
    }

    #[test]
    fn exact_trivial_cases() {
        assert_eq!(exact_mcmc(&e1(0), Limits::default()).unwrap().cost, 0.0);
        let inst = Instance {
            dim: 2,
            servers: vec![Point::new([1.0, 1.0])],
            clients: vec![Point::new([1.0, 1.0])],
            kappa: vec![1],
            alpha: 3.0,
            norm: Norm::Linf,
        };
        assert_eq!(exact_mcmc(&inst, Limits::default()).unwrap().cost, 0.0);
    }

    #[test]
    fn exact_outer_examples() {
        let rep = exact_outer_cover(&e1(2), &[2], &[0], Limits::default()).unwrap();
        assert_eq!(rep.cost, 3.0);
        let rep = exact_outer_cover(&e1(1), &[1], &[0], Limits::default()).unwrap();
        assert_eq!(rep.cost, 1.0);
        assert_eq!(rep.radii.0, vec![1.0, 0.0]);
        let rep = exact_outer_cover(&e1(1), &[1], &[], Limits::default()).unwrap();
        assert_eq!(rep.cost, 0.0);
    }

    #[test]
    fn budget_is_reported() {
        let limits = Limits { max_nodes: 1, max_time: None };
        assert!(matches!(exact_mcmc(&e1(2), limits), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn ratios() {
        let rep = ratio_report(&e1(2), Limits::default()).unwrap();
        assert_eq!(rep.ratio, 1.0);
        assert_eq!(rep.bound, 108.0);
        assert!(rep.satisfied);
        let rep = ratio_report(&e1(0), Limits::default()).unwrap();
        assert_eq!((rep.alg_cost, rep.oracle_cost, rep.ratio), (0.0, 0.0, 1.0));
        assert_eq!(ratio(5.0, 5.0), 1.0);
    }
}
