//! Norms, neighbor orderings and axis-aligned box algebra.
//!
//! An L∞ disk of radius `r` is the closed axis-aligned box `[c - r, c + r]^d`.
//! All containment and intersection tests are closed: touching counts.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance function used to measure client/server separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Linf,
    L2,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Linf => f.write_str("linf"),
            Norm::L2 => f.write_str("l2"),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(Norm::Linf),
            "l2" => Ok(Norm::L2),
            other => Err(Error::invalid(format!("unknown norm '{other}' (expected linf or l2)"))),
        }
    }
}

/// A point in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Distance between two coordinate slices of equal length. No dimension check.
#[inline]
pub(crate) fn dist_unchecked(p: &[f64], q: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::Linf => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        Norm::L2 => p
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Distance between `p` and `q` under `norm`.
pub fn dist(p: &Point, q: &Point, norm: Norm) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    Ok(dist_unchecked(&p.0, &q.0, norm))
}

/// Server indices sorted by nondecreasing distance to `x`, ties by index.
pub fn neighbor_order(x: &Point, servers: &[Point], norm: Norm) -> Result<Vec<usize>> {
    if servers.is_empty() {
        return Err(Error::invalid("neighbor_order needs at least one server"));
    }
    let mut keyed = Vec::with_capacity(servers.len());
    for (i, y) in servers.iter().enumerate() {
        keyed.push((dist(x, y, norm)?, i));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Closed axis-aligned box. Empty when `lo[i] > hi[i]` for some `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    /// Componentwise intersection; may be empty.
    pub fn intersection(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect(),
        }
    }

    /// Set equality: two empty boxes are equal regardless of their bounds.
    pub fn same_set(&self, other: &Aabb) -> bool {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => true,
            (false, false) => self == other,
            _ => false,
        }
    }
}

/// The L∞ disk of radius `r` around `center`.
pub fn disk_box(center: &Point, r: f64) -> Result<Aabb> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("negative radius {r}")));
    }
    Ok(Aabb {
        lo: center.0.iter().map(|c| c - r).collect(),
        hi: center.0.iter().map(|c| c + r).collect(),
    })
}

/// True iff the closed boxes share at least one point.
pub fn boxes_intersect(a: &Aabb, b: &Aabb) -> bool {
    a.lo
        .iter()
        .zip(&a.hi)
        .zip(b.lo.iter().zip(&b.hi))
        .all(|((alo, ahi), (blo, bhi))| alo <= bhi && blo <= ahi)
}

/// Closed L∞ disks `(c1, r1)` and `(c2, r2)` intersect iff `|c1 - c2|_∞ <= r1 + r2`.
#[inline]
pub(crate) fn linf_disks_intersect(c1: &[f64], r1: f64, c2: &[f64], r2: f64) -> bool {
    c1.iter()
        .zip(c2)
        .all(|(a, b)| a - r1 <= b + r2 && b - r2 <= a + r1)
}

/// Selects at most `2d` disks whose common intersection equals that of the
/// whole family.
///
/// Per axis, the disk with the largest lower edge and the disk with the
/// smallest upper edge determine the intersection along that axis. Ties go to
/// the smallest index. Returned indices are sorted and distinct.
pub fn binding_disks(disks: &[(&Point, f64)]) -> Result<Vec<usize>> {
    let Some(&(first, _)) = disks.first() else {
        return Err(Error::invalid("binding_disks needs at least one disk"));
    };
    let d = first.dim();
    if let Some((i, _)) = disks.iter().enumerate().find(|(_, (c, _))| c.dim() != d) {
        return Err(Error::invalid(format!("disk {i} has mismatched dimension")));
    }
    let mut chosen = Vec::with_capacity(2 * d);
    for axis in 0..d {
        let mut best_lo = 0;
        let mut best_hi = 0;
        for (i, (c, r)) in disks.iter().enumerate() {
            let lo = c.0[axis] - r;
            let hi = c.0[axis] + r;
            let (blo_c, blo_r) = disks[best_lo];
            if lo.total_cmp(&(blo_c.0[axis] - blo_r)) == Ordering::Greater {
                best_lo = i;
            }
            let (bhi_c, bhi_r) = disks[best_hi];
            if hi.total_cmp(&(bhi_c.0[axis] + bhi_r)) == Ordering::Less {
                best_hi = i;
            }
        }
        chosen.push(best_lo);
        chosen.push(best_hi);
    }
    chosen.sort_unstable();
    chosen.dedup();
    Ok(chosen)
}
