//! Primal-dual outer cover.
//!
//! An outer cover for a client subset `X'` gives every `x ∈ X'` some server
//! disk that contains `x` and whose radius is at least the distance from `x`
//! to its `κ(x)`-th nearest server. The procedure raises one dual variable per
//! client until every client is served by a tight disk, keeps a maximal
//! disjoint family of tight disks chosen largest first, and triples them.
//!
//! Everything here works in the L∞ norm regardless of the instance norm.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist_unchecked, linf_disks_intersect, Norm};
use crate::model::{radii_cost, Instance};

/// Relative slack allowed when re-checking floating-point dual sums.
pub const CERT_RTOL: f64 = 1e-9;

/// Per-client neighbor orderings, computed once per instance.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    /// `order[j][t]` is the index of the `(t+1)`-th nearest server to client `j`.
    order: Vec<Vec<usize>>,
    /// `dists[j][t]` is the distance to that server.
    dists: Vec<Vec<f64>>,
}

impl NeighborTable {
    pub fn new(inst: &Instance) -> Self {
        let mut order = Vec::with_capacity(inst.num_clients());
        let mut dists = Vec::with_capacity(inst.num_clients());
        for j in 0..inst.num_clients() {
            let mut keyed: Vec<(f64, usize)> = (0..inst.num_servers())
                .map(|i| (inst.server_client_dist(i, j), i))
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dists.push(keyed.iter().map(|k| k.0).collect());
            order.push(keyed.into_iter().map(|k| k.1).collect());
        }
        NeighborTable { order, dists }
    }

    /// The `k` nearest servers of client `j`.
    pub fn nearest(&self, j: usize, k: usize) -> &[usize] {
        &self.order[j][..k]
    }

    /// Distance from client `j` to its `k`-th nearest server (`k >= 1`); 0 for `k = 0`.
    pub fn kth_dist(&self, j: usize, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.dists[j][k - 1]
        }
    }
}

fn linf(inst: &Instance) -> Cow<'_, Instance> {
    if inst.norm == Norm::Linf {
        Cow::Borrowed(inst)
    } else {
        Cow::Owned(inst.with_norm(Norm::Linf))
    }
}

/// Smallest radius at which a disk at server `i` can serve client `j`:
/// `max(dist(y_i, x_j), dist(x_j, y^κ(x_j)))`.
pub fn r_min(inst: &Instance, kappa: &[usize], i: usize, j: usize) -> Result<f64> {
    let inst = linf(inst);
    if kappa[j] == 0 {
        return Err(Error::invalid(format!("client {j} has zero demand")));
    }
    if kappa[j] > inst.num_servers() {
        return Err(Error::invalid(format!("client {j} demands more servers than exist")));
    }
    let table = NeighborTable::new(&inst);
    Ok(inst.server_client_dist(i, j).max(table.kth_dist(j, kappa[j])))
}

/// A disk `δ(y_server, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightDisk {
    pub server: usize,
    pub radius: f64,
}

/// Final state of the covering phase.
#[derive(Debug, Clone)]
pub struct DualState {
    /// Client indices of `X'`, in the order `beta` refers to.
    pub clients: Vec<usize>,
    pub beta: Vec<f64>,
    /// Every disk that became tight, in the order it did.
    pub tight: Vec<TightDisk>,
}

impl DualState {
    pub fn dual_lower_bound(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// The finite dual constraint family: for each server, the distinct values of
/// `r_min(i, ·)` over `X'`, each with the prefix of clients it can serve.
struct Constraints {
    alpha: f64,
    /// Per server: local client positions sorted by `r_min`.
    order: Vec<Vec<usize>>,
    /// Per server: `(radius, prefix_len)` for each breakpoint.
    breaks: Vec<Vec<(f64, usize)>>,
}

impl Constraints {
    fn build(inst: &Instance, table: &NeighborTable, kappa: &[usize], clients: &[usize]) -> Self {
        let mut order = Vec::with_capacity(inst.num_servers());
        let mut breaks = Vec::with_capacity(inst.num_servers());
        for i in 0..inst.num_servers() {
            let mut keyed: Vec<(f64, usize)> = clients
                .iter()
                .enumerate()
                .map(|(local, &j)| {
                    let r = inst.server_client_dist(i, j).max(table.kth_dist(j, kappa[j]));
                    (r, local)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut b: Vec<(f64, usize)> = Vec::new();
            for (pos, &(r, _)) in keyed.iter().enumerate() {
                match b.last_mut() {
                    Some(last) if last.0 == r => last.1 = pos + 1,
                    _ => b.push((r, pos + 1)),
                }
            }
            order.push(keyed.into_iter().map(|k| k.1).collect());
            breaks.push(b);
        }
        Constraints { alpha: inst.alpha, order, breaks }
    }

    fn capacity(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else {
            r.powf(self.alpha)
        }
    }

    /// `Σ_{j ∈ C_i(r)} β_j` recomputed from scratch.
    fn load(&self, server: usize, k: usize, beta: &[f64]) -> f64 {
        let end = self.breaks[server][k].1;
        self.order[server][..end].iter().map(|&l| beta[l]).sum()
    }

    fn find(&self, disk: &TightDisk) -> Option<usize> {
        self.breaks[disk.server].iter().position(|b| b.0 == disk.radius)
    }
}

fn covering_with(inst: &Instance, table: &NeighborTable, kappa: &[usize], clients: &[usize]) -> (DualState, Constraints) {
    let cons = Constraints::build(inst, table, kappa, clients);
    let n = clients.len();
    let mut beta = vec![0.0; n];
    let mut client_tight = vec![false; n];
    let mut remaining = n;
    let mut tight = Vec::new();

    // Flattened per-constraint state: (server, break index) -> slot.
    let mut slot_of = Vec::with_capacity(inst.num_servers());
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (i, b) in cons.breaks.iter().enumerate() {
        slot_of.push(slots.len());
        slots.extend((0..b.len()).map(|k| (i, k)));
    }
    let cap: Vec<f64> = slots.iter().map(|&(i, k)| cons.capacity(cons.breaks[i][k].0)).collect();
    let mut load = vec![0.0; slots.len()];
    let mut is_tight = vec![false; slots.len()];
    let mut active = vec![0usize; slots.len()];

    let recount = |client_tight: &[bool], active: &mut [usize]| {
        for (i, b) in cons.breaks.iter().enumerate() {
            let mut count = 0;
            let mut pos = 0;
            for (k, &(_, end)) in b.iter().enumerate() {
                while pos < end {
                    if !client_tight[cons.order[i][pos]] {
                        count += 1;
                    }
                    pos += 1;
                }
                active[slot_of[i] + k] = count;
            }
        }
    };
    recount(&client_tight, &mut active);

    while remaining > 0 {
        let mut delta = f64::INFINITY;
        for s in 0..slots.len() {
            if !is_tight[s] && active[s] > 0 {
                let step = ((cap[s] - load[s]) / active[s] as f64).max(0.0);
                if step < delta {
                    delta = step;
                }
            }
        }
        debug_assert!(delta.is_finite(), "a non-tight client always has a constraint");

        let mut newly = Vec::new();
        for s in 0..slots.len() {
            if !is_tight[s] && active[s] > 0 {
                let step = ((cap[s] - load[s]) / active[s] as f64).max(0.0);
                if step == delta {
                    newly.push(s);
                }
            }
        }
        if delta > 0.0 {
            for (l, b) in beta.iter_mut().enumerate() {
                if !client_tight[l] {
                    *b += delta;
                }
            }
            for s in 0..slots.len() {
                load[s] += delta * active[s] as f64;
            }
        }
        // slots are laid out in (server, radius) order already
        for s in newly {
            is_tight[s] = true;
            let (i, k) = slots[s];
            tight.push(TightDisk { server: i, radius: cons.breaks[i][k].0 });
            for &l in &cons.order[i][..cons.breaks[i][k].1] {
                if !client_tight[l] {
                    client_tight[l] = true;
                    remaining -= 1;
                }
            }
        }
        recount(&client_tight, &mut active);
    }

    (DualState { clients: clients.to_vec(), beta, tight }, cons)
}

/// Raises the duals of all non-tight clients uniformly until every client in
/// `clients` is served by a tight disk.
pub fn covering_phase(inst: &Instance, kappa: &[usize], clients: &[usize]) -> Result<DualState> {
    let inst = linf(inst);
    check_scope(&inst, kappa, clients)?;
    let table = NeighborTable::new(&inst);
    Ok(covering_with(&inst, &table, kappa, clients).0)
}

fn check_scope(inst: &Instance, kappa: &[usize], clients: &[usize]) -> Result<()> {
    if kappa.len() != inst.num_clients() {
        return Err(Error::invalid("demand vector length does not match client count"));
    }
    for &j in clients {
        if j >= inst.num_clients() {
            return Err(Error::invalid(format!("client index {j} out of range")));
        }
        if kappa[j] == 0 || kappa[j] > inst.num_servers() {
            return Err(Error::invalid(format!(
                "client {j} has demand {} outside 1..={}",
                kappa[j],
                inst.num_servers()
            )));
        }
    }
    Ok(())
}

/// Closed-disk intersection that agrees with distance-based containment.
///
/// Tight disks pass exactly through clients, and `c ± r` can round away from
/// `|c − x| = r`. Two disks therefore also count as intersecting when their
/// centers are within `r1 + r2` or when some client of `clients` lies in both.
fn disks_meet(inst: &Instance, clients: &[usize], a: &TightDisk, b: &TightDisk) -> bool {
    let (ca, cb) = (&inst.servers[a.server].0, &inst.servers[b.server].0);
    linf_disks_intersect(ca, a.radius, cb, b.radius)
        || dist_unchecked(ca, cb, Norm::Linf) <= a.radius + b.radius
        || clients.iter().any(|&j| {
            inst.server_client_dist(a.server, j) <= a.radius && inst.server_client_dist(b.server, j) <= b.radius
        })
}

/// Keeps a maximal pairwise-disjoint subfamily, largest radius first (ties by
/// server index). `clients` is the scope `X'` the disks were built for.
pub fn coarsening_phase(inst: &Instance, clients: &[usize], tight: &[TightDisk]) -> Vec<TightDisk> {
    let inst = linf(inst);
    let mut sorted = tight.to_vec();
    sorted.sort_by(|a, b| b.radius.total_cmp(&a.radius).then(a.server.cmp(&b.server)));
    let mut family: Vec<TightDisk> = Vec::new();
    for d in sorted {
        if !family.iter().any(|f| disks_meet(&inst, clients, f, &d)) {
            family.push(d);
        }
    }
    family
}

/// Output of the outer-cover procedure together with its dual certificate.
#[derive(Debug, Clone)]
pub struct OuterCoverResult {
    /// Outer-cover radius per server.
    pub rho: Vec<f64>,
    /// Disjoint tight disks before tripling.
    pub family: Vec<TightDisk>,
    /// Client indices of `X'`, parallel to `beta`.
    pub clients: Vec<usize>,
    pub beta: Vec<f64>,
    /// `Σ β_j`, a lower bound on the optimal outer-cover cost.
    pub dual_lower_bound: f64,
    /// All tight disks found by the covering phase.
    pub tight: Vec<TightDisk>,
}

impl OuterCoverResult {
    pub fn cost(&self, alpha: f64) -> f64 {
        radii_cost(&self.rho, alpha)
    }
}

pub(crate) fn solve_with(
    inst: &Instance,
    table: &NeighborTable,
    kappa: &[usize],
    clients: &[usize],
) -> OuterCoverResult {
    let (dual, _) = covering_with(inst, table, kappa, clients);
    let family = coarsening_phase(inst, clients, &dual.tight);
    let mut rho = vec![0.0; inst.num_servers()];
    for d in &family {
        rho[d.server] = 3.0 * d.radius;
    }
    OuterCoverResult {
        rho,
        family,
        clients: dual.clients,
        dual_lower_bound: dual.beta.iter().sum(),
        beta: dual.beta,
        tight: dual.tight,
    }
}

/// Approximate minimum-cost outer cover of `clients` under demands `kappa`.
/// The cost is at most `3^α` times optimal.
pub fn solve_outer_cover(inst: &Instance, kappa: &[usize], clients: &[usize]) -> Result<OuterCoverResult> {
    let inst = linf(inst);
    check_scope(&inst, kappa, clients)?;
    let table = NeighborTable::new(&inst);
    Ok(solve_with(&inst, &table, kappa, clients))
}

/// Returns the first client of `clients` that `rho` fails to serve.
pub fn verify_outer_cover(inst: &Instance, kappa: &[usize], clients: &[usize], rho: &[f64]) -> Option<usize> {
    let inst = linf(inst);
    let table = NeighborTable::new(&inst);
    clients.iter().copied().find(|&j| {
        let need = table.kth_dist(j, kappa[j]);
        !(0..inst.num_servers()).any(|i| inst.server_client_dist(i, j) <= rho[i] && rho[i] >= need)
    })
}

/// Re-derives the dual certificate of an outer-cover run from scratch.
///
/// Checks dual feasibility on every breakpoint constraint, tightness of every
/// disk in the family, pairwise disjointness, `cost(ρ) = 3^α·cost(F)` and
/// `cost(ρ) ≤ 3^α·Σβ`. Float comparisons use [`CERT_RTOL`].
pub fn check_certificate(inst: &Instance, kappa: &[usize], result: &OuterCoverResult) -> Result<()> {
    let inst = linf(inst);
    let table = NeighborTable::new(&inst);
    let cons = Constraints::build(&inst, &table, kappa, &result.clients);
    let close = |a: f64, b: f64| (a - b).abs() <= CERT_RTOL * a.abs().max(b.abs()).max(1.0);
    let leq = |a: f64, b: f64| a <= b + CERT_RTOL * a.abs().max(b.abs()).max(1.0);

    if result.beta.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::Invariant("negative dual value".into()));
    }
    for (i, b) in cons.breaks.iter().enumerate() {
        for (k, &(r, _)) in b.iter().enumerate() {
            let sum = cons.load(i, k, &result.beta);
            if !leq(sum, cons.capacity(r)) {
                return Err(Error::Invariant(format!(
                    "dual constraint (server {i}, r={r}) violated: {sum} > {}",
                    cons.capacity(r)
                )));
            }
        }
    }
    for d in &result.family {
        let k = cons.find(d).ok_or_else(|| {
            Error::Invariant(format!("family disk {d:?} is not a breakpoint constraint"))
        })?;
        let sum = cons.load(d.server, k, &result.beta);
        if !close(sum, cons.capacity(d.radius)) {
            return Err(Error::Invariant(format!("family disk {d:?} is not tight ({sum})")));
        }
    }
    for (a, da) in result.family.iter().enumerate() {
        for db in &result.family[a + 1..] {
            if disks_meet(&inst, &result.clients, da, db) {
                return Err(Error::Invariant(format!("family disks {da:?} and {db:?} intersect")));
            }
        }
    }
    let scale = 3f64.powf(inst.alpha);
    let rho_cost = result.cost(inst.alpha);
    let family_cost: f64 = result.family.iter().map(|d| cons.capacity(d.radius)).sum();
    if !close(rho_cost, scale * family_cost) {
        return Err(Error::Invariant(format!(
            "cost(rho) = {rho_cost} but 3^alpha * cost(F) = {}",
            scale * family_cost
        )));
    }
    let dual: f64 = result.beta.iter().sum();
    if !leq(rho_cost, scale * dual) {
        return Err(Error::Invariant(format!(
            "cost(rho) = {rho_cost} exceeds 3^alpha * dual = {}",
            scale * dual
        )));
    }
    Ok(())
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

    fn disk(server: usize, radius: f64) -> TightDisk {
        TightDisk { server, radius }
    }

    #[test]
    fn minimum_eligible_radius() {
        let inst = e1(2);
        assert_eq!(r_min(&inst, &[2], 0, 0).unwrap(), 3.0);
        assert_eq!(r_min(&inst, &[2], 1, 0).unwrap(), 3.0);
        assert_eq!(r_min(&e1(1), &[1], 0, 0).unwrap(), 1.0);
        assert!(r_min(&inst, &[0], 0, 0).is_err());
    }

    #[test]
    fn covering_two_tight_disks() {
        let st = covering_phase(&e1(2), &[2], &[0]).unwrap();
        assert_eq!(st.beta, vec![3.0]);
        assert_eq!(st.tight, vec![disk(0, 3.0), disk(1, 3.0)]);
        assert_eq!(st.dual_lower_bound(), 3.0);
    }

    #[test]
    fn covering_single_demand() {
        let st = covering_phase(&e1(1), &[1], &[0]).unwrap();
        assert_eq!(st.beta, vec![1.0]);
        assert_eq!(st.tight, vec![disk(0, 1.0)]);
    }

    #[test]
    fn covering_zero_radius() {
        let inst = Instance {
            dim: 2,
            servers: vec![Point::new([2.0, 2.0]), Point::new([9.0, 9.0])],
            clients: vec![Point::new([2.0, 2.0])],
            kappa: vec![1],
            alpha: 2.0,
            norm: Norm::Linf,
        };
        let st = covering_phase(&inst, &[1], &[0]).unwrap();
        assert_eq!(st.beta, vec![0.0]);
        assert_eq!(st.tight, vec![disk(0, 0.0)]);
        let oc = solve_outer_cover(&inst, &[1], &[0]).unwrap();
        assert_eq!(oc.rho, vec![0.0, 0.0]);
        assert_eq!(verify_outer_cover(&inst, &[1], &[0], &oc.rho), None);
    }

    #[test]
    fn coarsening() {
        let inst = e1(2);
        assert_eq!(coarsening_phase(&inst, &[0], &[disk(1, 3.0), disk(0, 3.0)]), vec![disk(0, 3.0)]);
        assert_eq!(coarsening_phase(&inst, &[0], &[disk(1, 3.0)]), vec![disk(1, 3.0)]);
        let apart = coarsening_phase(&inst, &[0], &[disk(0, 1.0), disk(1, 2.5)]);
        assert_eq!(apart, vec![disk(1, 2.5), disk(0, 1.0)]);
    }

    #[test]
    fn coarsening_sees_shared_boundary_client() {
        // Both disks pass exactly through the client, but the box edge
        // 11.865532040770653 - 39.83593180267306 rounds above its y coordinate.
        let inst = Instance {
            dim: 2,
            servers: vec![
                Point::new([-3.4656167621190264, 11.865532040770653]),
                Point::new([-29.299569970855167, -42.89220920972372]),
            ],
            clients: vec![Point::new([-19.51381899889968, -27.97039976190241])],
            kappa: vec![1],
            alpha: 2.0,
            norm: Norm::Linf,
        };
        let a = disk(0, inst.server_client_dist(0, 0));
        let b = disk(1, inst.server_client_dist(1, 0));
        assert_eq!(coarsening_phase(&inst, &[0], &[a, b]), vec![a]);
    }

    #[test]
    fn outer_cover_examples() {
        let oc = solve_outer_cover(&e1(2), &[2], &[0]).unwrap();
        assert_eq!(oc.rho, vec![9.0, 0.0]);
        assert_eq!(oc.family, vec![disk(0, 3.0)]);
        assert_eq!(oc.dual_lower_bound, 3.0);
        check_certificate(&e1(2), &[2], &oc).unwrap();

        let oc = solve_outer_cover(&e1(1), &[1], &[0]).unwrap();
        assert_eq!(oc.rho, vec![3.0, 0.0]);

        let oc = solve_outer_cover(&e1(2), &[2], &[]).unwrap();
        assert_eq!(oc.rho, vec![0.0, 0.0]);
        assert!(oc.family.is_empty());
        assert_eq!(oc.dual_lower_bound, 0.0);
    }

    #[test]
    fn verification() {
        let inst = e1(2);
        assert_eq!(verify_outer_cover(&inst, &[2], &[0], &[9.0, 0.0]), None);
        assert_eq!(verify_outer_cover(&inst, &[2], &[0], &[2.0, 0.0]), Some(0));
        assert_eq!(verify_outer_cover(&inst, &[2], &[0], &[0.0, 3.0]), None);
    }

    #[test]
    fn certificate_catches_tampering() {
        let inst = e1(2);
        let mut oc = solve_outer_cover(&inst, &[2], &[0]).unwrap();
        oc.beta[0] = 3.5;
        assert!(matches!(check_certificate(&inst, &[2], &oc), Err(Error::Invariant(_))));
        let mut oc = solve_outer_cover(&inst, &[2], &[0]).unwrap();
        oc.family.push(disk(1, 3.0));
        assert!(check_certificate(&inst, &[2], &oc).is_err());
    }

    #[test]
    fn rejects_zero_demand_clients() {
        assert!(covering_phase(&e1(2), &[0], &[0]).is_err());
    }
}
