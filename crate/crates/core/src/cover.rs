//! Level-by-level multi-cover construction.
//!
//! Starting from all-zero radii, level `t` raises every client's demand to
//! `κ_t(x) = max(0, κ(x) − (K − t))` where `K = max κ`. Each level computes an
//! outer cover of the under-covered clients, and for every outer-cover disk
//! (largest first) gathers the clients it serves, the union of their `κ_t`
//! nearest servers, and at most `2d` of those servers whose disks already pin
//! down the common intersection. Those few disks are grown just enough to
//! reach every gathered client.
//!
//! The whole construction runs in L∞. For L2 instances the radii are scaled
//! by `√d` at the end.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{binding_disks, dist_unchecked, Norm, Point};
use crate::model::{radii_cost, Instance, RadiusAssignment};
use crate::outer_cover::{self, NeighborTable, CERT_RTOL};

/// Relative slack for the geometric sanity checks, which compare sums of
/// rounded distances.
const GEOM_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Number of clients not yet covered at this level's demand.
    pub x_prime_size: usize,
    /// `Σ ρ^α` of the level's outer cover.
    pub outer_cost: f64,
    /// `Σ β` of the level's outer cover.
    pub dual_lower_bound: f64,
    /// Measured growth of `Σ r^α` over the level.
    pub increase: f64,
    /// `2d · 3^α · outer_cost`.
    pub bound: f64,
    /// Outer-cover servers processed as cluster centers, in order.
    pub primaries: Vec<usize>,
    /// Largest binding subset used by any cluster.
    pub max_binding: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveTrace {
    pub levels: Vec<LevelRecord>,
    /// L∞ cost after the last level, before any norm transfer or shrinking.
    pub final_cost: f64,
}

impl SolveTrace {
    pub fn dual_lower_bounds(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.dual_lower_bound).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Shrink radii to the smallest feasible candidate values after solving.
    pub shrink: bool,
    /// Check the per-cluster distance claims on every iteration.
    pub geometric_asserts: bool,
    /// Re-derive the dual certificate of every level's outer cover.
    pub certify: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { shrink: false, geometric_asserts: cfg!(debug_assertions), certify: false }
    }
}

fn linf(inst: &Instance) -> Cow<'_, Instance> {
    if inst.norm == Norm::Linf {
        Cow::Borrowed(inst)
    } else {
        Cow::Owned(inst.with_norm(Norm::Linf))
    }
}

/// Solves with default options.
pub fn solve(inst: &Instance) -> Result<(RadiusAssignment, SolveTrace)> {
    solve_with(inst, &SolveOptions::default())
}

/// Computes a feasible assignment under the instance norm.
pub fn solve_with(inst: &Instance, opts: &SolveOptions) -> Result<(RadiusAssignment, SolveTrace)> {
    inst.ensure_valid()?;
    let work = linf(inst);
    let table = NeighborTable::new(&work);
    let mut radii = vec![0.0; work.num_servers()];
    let top = work.max_kappa();
    let mut trace = SolveTrace::default();

    for level in 1..=top {
        let demand: Vec<usize> = work.kappa.iter().map(|&k| k.saturating_sub(top - level)).collect();
        let rec = extend_level(&work, &table, &mut radii, &demand, level, opts)?;
        trace.levels.push(rec);
    }
    trace.final_cost = radii_cost(&radii, work.alpha);

    let mut out = RadiusAssignment(radii.clone());
    if inst.norm == Norm::L2 {
        out = l2_transfer(&out, inst.dim);
        absorb_rounding(inst, &work, &radii, &mut out.0);
    }
    if opts.shrink {
        out = shrink_postpass(inst, &out)?;
    }
    if let Some(j) = inst.first_uncovered(&out)? {
        return Err(Error::Invariant(format!("client {j} is under-covered in the final assignment")));
    }
    Ok((out, trace))
}

/// Extends a `κ_{t−1}`-cover held in `radii` to a `κ_t`-cover.
///
/// `inst` must use the L∞ norm and `table` must be built from it.
pub fn extend_level(
    inst: &Instance,
    table: &NeighborTable,
    radii: &mut [f64],
    demand: &[usize],
    level: usize,
    opts: &SolveOptions,
) -> Result<LevelRecord> {
    extend_level_impl(inst, table, radii, demand, level, opts, true)
}

fn extend_level_impl(
    inst: &Instance,
    table: &NeighborTable,
    radii: &mut [f64],
    demand: &[usize],
    level: usize,
    opts: &SolveOptions,
    enlarge: bool,
) -> Result<LevelRecord> {
    debug_assert_eq!(inst.norm, Norm::Linf);
    let before = radii_cost(radii, inst.alpha);
    let mut counts: Vec<usize> = (0..inst.num_clients())
        .map(|j| if demand[j] == 0 { 0 } else { inst.count_unchecked(radii, j) })
        .collect();
    let pending: Vec<usize> = (0..inst.num_clients()).filter(|&j| counts[j] < demand[j]).collect();

    let mut rec = LevelRecord {
        level,
        x_prime_size: pending.len(),
        outer_cost: 0.0,
        dual_lower_bound: 0.0,
        increase: 0.0,
        bound: 0.0,
        primaries: Vec::new(),
        max_binding: 0,
    };
    if pending.is_empty() {
        return Ok(rec);
    }

    let oc = outer_cover::solve_with(inst, table, demand, &pending);
    if opts.certify {
        outer_cover::check_certificate(inst, demand, &oc)?;
        if let Some(j) = outer_cover::verify_outer_cover(inst, demand, &pending, &oc.rho) {
            return Err(Error::Invariant(format!("level {level}: outer cover misses client {j}")));
        }
    }
    rec.outer_cost = oc.cost(inst.alpha);
    rec.dual_lower_bound = oc.dual_lower_bound;

    let mut pool: Vec<usize> = (0..inst.num_servers()).filter(|&i| oc.rho[i] > 0.0).collect();
    pool.sort_by(|&a, &b| oc.rho[b].total_cmp(&oc.rho[a]).then(a.cmp(&b)));
    // Zero-radius outer-cover disks only arise for clients sitting on their
    // κ-th neighbor; those are already covered, so they never reach here.

    let mut open = pending.clone();
    let d = inst.dim;
    for center in pool {
        if open.is_empty() {
            break;
        }
        rec.primaries.push(center);
        let rho = oc.rho[center];
        let cluster: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&j| inst.server_client_dist(center, j) <= rho && rho >= table.kth_dist(j, demand[j]))
            .collect();
        if cluster.is_empty() {
            continue;
        }

        let mut group: Vec<usize> = cluster.iter().flat_map(|&j| table.nearest(j, demand[j]).iter().copied()).collect();
        group.sort_unstable();
        group.dedup();

        if opts.geometric_asserts {
            check_cluster_claims(inst, center, rho, &cluster, &group)?;
        }

        let disks: Vec<(&Point, f64)> = group.iter().map(|&y| (&inst.servers[y], radii[y])).collect();
        let binding = binding_disks(&disks)?;
        if binding.len() > 2 * d {
            return Err(Error::Invariant(format!(
                "binding subset of size {} exceeds 2d = {}",
                binding.len(),
                2 * d
            )));
        }
        rec.max_binding = rec.max_binding.max(binding.len());

        if enlarge {
            for y in binding.into_iter().map(|b| group[b]) {
                let need = cluster
                    .iter()
                    .map(|&j| inst.server_client_dist(y, j))
                    .fold(0.0, f64::max);
                if need <= radii[y] {
                    continue;
                }
                if opts.geometric_asserts && need > 3.0 * rho * (1.0 + GEOM_RTOL) {
                    return Err(Error::Invariant(format!(
                        "server {y} grown to {need}, beyond 3 * rho = {}",
                        3.0 * rho
                    )));
                }
                let old = radii[y];
                radii[y] = need;
                for &j in &open {
                    let dj = inst.server_client_dist(y, j);
                    if dj > old && dj <= need {
                        counts[j] += 1;
                    }
                }
            }
        }

        if let Some(&j) = cluster.iter().find(|&&j| counts[j] < demand[j]) {
            return Err(Error::Invariant(format!(
                "client {j} still under-covered after enlarging the cluster around server {center}"
            )));
        }
        open.retain(|&j| counts[j] < demand[j]);
    }

    if let Some(&j) = open.first() {
        return Err(Error::Invariant(format!("client {j} not served by any outer-cover disk")));
    }

    let after = radii_cost(radii, inst.alpha);
    rec.increase = after - before;
    rec.bound = (2 * d) as f64 * 3f64.powf(inst.alpha) * rec.outer_cost;
    if rec.increase > rec.bound * (1.0 + CERT_RTOL) {
        return Err(Error::Invariant(format!(
            "level {level}: cost increase {} exceeds bound {}",
            rec.increase, rec.bound
        )));
    }
    Ok(rec)
}

/// Every clustered client lies within `ρ` of the center and every gathered
/// server within `2ρ`.
fn check_cluster_claims(inst: &Instance, center: usize, rho: f64, cluster: &[usize], group: &[usize]) -> Result<()> {
    for &j in cluster {
        let dj = inst.server_client_dist(center, j);
        if dj > rho {
            return Err(Error::Invariant(format!("client {j} at {dj} from center {center}, rho = {rho}")));
        }
    }
    let c = &inst.servers[center].0;
    for &y in group {
        let dy = dist_unchecked(&inst.servers[y].0, c, Norm::Linf);
        if dy > 2.0 * rho * (1.0 + GEOM_RTOL) {
            return Err(Error::Invariant(format!("server {y} at {dy} from center {center}, 2 rho = {}", 2.0 * rho)));
        }
    }
    Ok(())
}

/// Scales L∞-feasible radii by `√d`, which makes them L2-feasible.
pub fn l2_transfer(radii: &RadiusAssignment, dim: usize) -> RadiusAssignment {
    let s = (dim as f64).sqrt();
    RadiusAssignment(radii.0.iter().map(|r| r * s).collect())
}

/// `√d·r` can round one ulp below an L2 distance that equals it exactly (on
/// a diagonal). Lift each transferred radius to the L2 distance of every
/// client its L∞ disk contained.
fn absorb_rounding(inst: &Instance, work: &Instance, linf_radii: &[f64], out: &mut [f64]) {
    for (i, r) in out.iter_mut().enumerate() {
        for j in 0..inst.num_clients() {
            if work.server_client_dist(i, j) <= linf_radii[i] {
                *r = r.max(inst.server_client_dist(i, j));
            }
        }
    }
}

/// Greedily shrinks radii, largest first, to the smallest value that keeps
/// every demand met under the instance norm.
pub fn shrink_postpass(inst: &Instance, radii: &RadiusAssignment) -> Result<RadiusAssignment> {
    if let Some(j) = inst.first_uncovered(radii)? {
        return Err(Error::invalid(format!("cannot shrink an infeasible assignment (client {j})")));
    }
    let mut r = radii.0.clone();
    let mut counts: Vec<usize> = (0..inst.num_clients()).map(|j| inst.count_unchecked(&r, j)).collect();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
    for i in order {
        // Clients this disk covers that cannot afford to lose it.
        let keep = (0..inst.num_clients())
            .filter(|&j| counts[j] == inst.kappa[j])
            .map(|j| inst.server_client_dist(i, j))
            .filter(|&dj| dj <= r[i])
            .fold(0.0, f64::max);
        if keep < r[i] {
            for (j, c) in counts.iter_mut().enumerate() {
                let dj = inst.server_client_dist(i, j);
                if dj > keep && dj <= r[i] {
                    *c -= 1;
                }
            }
            r[i] = keep;
        }
    }
    Ok(RadiusAssignment(r))
}
