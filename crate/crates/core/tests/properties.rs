mod common;

use common::random_instance;
use multicover::cover::{extend_level, solve_with, SolveOptions};
use multicover::geometry::{binding_disks, disk_box, dist, neighbor_order};
use multicover::model::cost;
use multicover::oracle::{exact_mcmc, exact_outer_cover, Limits};
use multicover::outer_cover::{solve_outer_cover, verify_outer_cover, NeighborTable};
use multicover::{Instance, Norm, Point, RadiusAssignment};
use proptest::prelude::*;

fn points(d: usize, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec(-20.0f64..20.0, d).prop_map(Point), n)
}

/// Minimum cost over the cartesian product of per-server menus.
fn enumerate_optimum(inst: &Instance, menus: &[Vec<f64>]) -> f64 {
    let n = menus.len();
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let r = RadiusAssignment((0..n).map(|i| menus[i][idx[i]]).collect());
        if inst.is_feasible(&r).unwrap() {
            best = best.min(cost(&r, inst.alpha));
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < menus[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
    }
}

proptest! {
    #[test]
    fn norm_sandwich(d in 1usize..4, pts in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2)) {
        let p = Point(pts[0][..d].to_vec());
        let q = Point(pts[1][..d].to_vec());
        let li = dist(&p, &q, Norm::Linf).unwrap();
        let l2 = dist(&p, &q, Norm::L2).unwrap();
        prop_assert!(li <= l2 * (1.0 + 1e-15));
        prop_assert!(l2 <= (d as f64).sqrt() * li * (1.0 + 1e-15));
    }

    #[test]
    fn neighbor_order_is_sorted_permutation(x in points(2, 1..=1), ys in points(2, 1..=30)) {
        let order = neighbor_order(&x[0], &ys, Norm::Linf).unwrap();
        let mut seen = order.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..ys.len()).collect::<Vec<_>>());
        let ds: Vec<f64> = order.iter().map(|&i| dist(&x[0], &ys[i], Norm::Linf).unwrap()).collect();
        prop_assert!(ds.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn binding_subset_matches_full_intersection(
        d in 1usize..4,
        raw in prop::collection::vec((prop::collection::vec(-10.0f64..10.0, 3), 0.0f64..12.0), 1..25),
    ) {
        let centers: Vec<Point> = raw.iter().map(|(c, _)| Point(c[..d].to_vec())).collect();
        let disks: Vec<(&Point, f64)> = centers.iter().zip(&raw).map(|(c, (_, r))| (c, *r)).collect();
        let s = binding_disks(&disks).unwrap();
        prop_assert!(s.len() <= 2 * d);
        let full = disks.iter().map(|(c, r)| disk_box(c, *r).unwrap()).reduce(|a, b| a.intersection(&b)).unwrap();
        let sub = s.iter().map(|&i| disk_box(disks[i].0, disks[i].1).unwrap()).reduce(|a, b| a.intersection(&b)).unwrap();
        prop_assert!(full.same_set(&sub));
    }

    #[test]
    fn instance_json_round_trip(seed in any::<u64>()) {
        let inst = random_instance(seed, &[1, 2, 3], 12, 30, &[1.0, 2.0, 2.5], &[Norm::Linf, Norm::L2]);
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.to_json().unwrap(), inst.to_json().unwrap());
    }

    #[test]
    fn feasibility_is_monotone(seed in any::<u64>(), bump in 0.0f64..5.0, which in any::<prop::sample::Index>()) {
        let inst = random_instance(seed, &[1, 2, 3], 10, 20, &[1.0, 2.0], &[Norm::Linf, Norm::L2]);
        let (mut r, _) = solve_with(&inst, &SolveOptions::default()).unwrap();
        prop_assert!(inst.is_feasible(&r).unwrap());
        let i = which.index(r.len());
        r.0[i] += bump;
        prop_assert!(inst.is_feasible(&r).unwrap());
    }
}

#[test]
fn candidate_radii_suffice() {
    for seed in 0..60 {
        let inst = random_instance(seed, &[1, 2], 3, 4, &[1.0, 2.0, 3.0], &[Norm::Linf, Norm::L2]);
        let menus = inst.candidate_radii().0;
        let with_mid: Vec<Vec<f64>> = menus
            .iter()
            .map(|m| {
                let mut v = m.clone();
                v.extend(m.windows(2).map(|w| 0.5 * (w[0] + w[1])));
                if let Some(&top) = m.last() {
                    v.push(top + 1.0);
                }
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        assert_eq!(enumerate_optimum(&inst, &menus), enumerate_optimum(&inst, &with_mid), "seed {seed}");
    }
}

#[test]
fn exact_search_matches_enumeration() {
    for seed in 0..80 {
        let inst = random_instance(seed, &[1, 2, 3], 4, 6, &[1.0, 2.0, 3.0], &[Norm::Linf, Norm::L2]);
        let rep = exact_mcmc(&inst, Limits::default()).unwrap();
        assert!(inst.is_feasible(&rep.radii).unwrap());
        let menus = inst.candidate_radii().0;
        for (i, r) in rep.radii.0.iter().enumerate() {
            assert!(menus[i].contains(r));
        }
        let brute = enumerate_optimum(&inst, &menus);
        assert!((rep.cost - brute).abs() <= 1e-9 * brute.max(1.0), "seed {seed}: {} vs {brute}", rep.cost);
    }
}

#[test]
fn levels_only_grow_radii() {
    for seed in 0..100 {
        let inst = random_instance(seed, &[1, 2, 3], 15, 40, &[1.0, 2.0], &[Norm::Linf]);
        let table = NeighborTable::new(&inst);
        let top = inst.max_kappa();
        let mut radii = vec![0.0; inst.num_servers()];
        let opts = SolveOptions { shrink: false, geometric_asserts: true, certify: true };
        for level in 1..=top {
            let demand: Vec<usize> = inst.kappa.iter().map(|&k| k.saturating_sub(top - level)).collect();
            let before = radii.clone();
            extend_level(&inst, &table, &mut radii, &demand, level, &opts).unwrap();
            assert!(before.iter().zip(&radii).all(|(a, b)| a <= b), "seed {seed} level {level}");
            let r = RadiusAssignment(radii.clone());
            for j in 0..inst.num_clients() {
                assert!(inst.coverage_count(&r, j).unwrap() >= demand[j]);
            }
        }
    }
}

#[test]
fn solve_trace_increases_sum_to_cost() {
    for seed in 0..100 {
        let inst = random_instance(seed, &[1, 2, 3], 20, 60, &[1.0, 2.0, 3.0], &[Norm::Linf, Norm::L2]);
        let (_, trace) = solve_with(&inst, &SolveOptions::default()).unwrap();
        let total: f64 = trace.levels.iter().map(|l| l.increase).sum();
        assert!((total - trace.final_cost).abs() <= 1e-9 * trace.final_cost.max(1.0));
        for l in &trace.levels {
            assert!(l.max_binding <= 2 * inst.dim);
        }
    }
}

#[test]
fn shrink_never_hurts() {
    for seed in 0..100 {
        let inst = random_instance(seed, &[1, 2, 3], 12, 30, &[1.0, 2.0], &[Norm::Linf, Norm::L2]);
        let (plain, _) = solve_with(&inst, &SolveOptions::default()).unwrap();
        let opts = SolveOptions { shrink: true, ..SolveOptions::default() };
        let (shrunk, _) = solve_with(&inst, &opts).unwrap();
        assert!(inst.is_feasible(&shrunk).unwrap());
        assert!(cost(&shrunk, inst.alpha) <= cost(&plain, inst.alpha));
    }
}

#[test]
fn outer_cover_is_valid_and_sandwiched() {
    for seed in 0..150 {
        let inst = random_instance(seed, &[1, 2, 3], 6, 8, &[1.0, 2.0, 3.0], &[Norm::Linf]);
        let clients: Vec<usize> = (0..inst.num_clients()).filter(|&j| inst.kappa[j] > 0).collect();
        let oc = solve_outer_cover(&inst, &inst.kappa, &clients).unwrap();
        assert_eq!(verify_outer_cover(&inst, &inst.kappa, &clients, &oc.rho), None);
        let exact = exact_outer_cover(&inst, &inst.kappa, &clients, Limits::default()).unwrap();
        assert_eq!(verify_outer_cover(&inst, &inst.kappa, &clients, &exact.radii.0), None);
        let tol = 1e-9 * exact.cost.max(1.0);
        assert!(oc.dual_lower_bound <= exact.cost + tol, "seed {seed}");
        assert!(exact.cost <= oc.cost(inst.alpha) + tol, "seed {seed}");
    }
}
