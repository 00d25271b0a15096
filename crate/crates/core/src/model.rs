//! Instances, radius assignments, evaluation and the on-disk formats.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cover::SolveTrace;
use crate::error::{Error, Result};
use crate::geometry::{dist_unchecked, Norm, Point};

pub const FORMAT_VERSION: u32 = 1;

/// A multi-cover problem: servers `Y`, clients `X`, per-client demands.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub dim: usize,
    pub servers: Vec<Point>,
    pub clients: Vec<Point>,
    pub kappa: Vec<usize>,
    pub alpha: f64,
    pub norm: Norm,
}

/// One radius per server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RadiusAssignment(pub Vec<f64>);

impl RadiusAssignment {
    pub fn zeros(n: usize) -> Self {
        RadiusAssignment(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-server sorted, duplicate-free radii that contain an optimal assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRadiusSet(pub Vec<Vec<f64>>);

impl CandidateRadiusSet {
    pub fn server(&self, i: usize) -> &[f64] {
        &self.0[i]
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    dim: usize,
    alpha: f64,
    norm: Norm,
    servers: Vec<Point>,
    clients: Vec<Point>,
    kappa: Vec<usize>,
}

impl Instance {
    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn max_kappa(&self) -> usize {
        self.kappa.iter().copied().max().unwrap_or(0)
    }

    /// Distance from server `i` to client `j` under the instance norm.
    #[inline]
    pub fn server_client_dist(&self, i: usize, j: usize) -> f64 {
        dist_unchecked(&self.servers[i].0, &self.clients[j].0, self.norm)
    }

    /// Same coordinates and demands, measured in another norm.
    pub fn with_norm(&self, norm: Norm) -> Instance {
        Instance { norm, ..self.clone() }
    }

    /// Every invariant violation; empty means the instance is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.dim == 0 {
            v.push("dimension must be at least 1".to_string());
        }
        if !(self.alpha >= 1.0) || !self.alpha.is_finite() {
            v.push(format!("alpha below 1 (got {})", self.alpha));
        }
        if self.kappa.len() != self.clients.len() {
            v.push(format!(
                "kappa has {} entries for {} clients",
                self.kappa.len(),
                self.clients.len()
            ));
        }
        for (what, pts) in [("server", &self.servers), ("client", &self.clients)] {
            for (i, p) in pts.iter().enumerate() {
                if p.dim() != self.dim {
                    v.push(format!("{what} {i} has dimension {} (expected {})", p.dim(), self.dim));
                }
                if p.0.iter().any(|c| !c.is_finite()) {
                    v.push(format!("{what} {i} has a non-finite coordinate"));
                }
            }
        }
        for (j, &k) in self.kappa.iter().enumerate() {
            if k > self.servers.len() {
                v.push(format!(
                    "kappa exceeds server count at client {j} ({k} > {})",
                    self.servers.len()
                ));
            }
        }
        v
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    fn check_assignment(&self, r: &RadiusAssignment) -> Result<()> {
        if r.len() != self.servers.len() {
            return Err(Error::invalid(format!(
                "assignment has {} radii for {} servers",
                r.len(),
                self.servers.len()
            )));
        }
        if let Some(i) = r.0.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(format!("radius {i} is negative or non-finite")));
        }
        Ok(())
    }

    /// Number of servers whose disk contains client `j`.
    pub fn coverage_count(&self, r: &RadiusAssignment, j: usize) -> Result<usize> {
        self.check_assignment(r)?;
        if j >= self.clients.len() {
            return Err(Error::invalid(format!("client index {j} out of range")));
        }
        Ok(self.count_unchecked(&r.0, j))
    }

    #[inline]
    pub(crate) fn count_unchecked(&self, radii: &[f64], j: usize) -> usize {
        (0..self.servers.len())
            .filter(|&i| self.server_client_dist(i, j) <= radii[i])
            .count()
    }

    /// First client whose demand is not met, if any.
    pub fn first_uncovered(&self, r: &RadiusAssignment) -> Result<Option<usize>> {
        self.check_assignment(r)?;
        Ok((0..self.clients.len()).find(|&j| self.count_unchecked(&r.0, j) < self.kappa[j]))
    }

    pub fn is_feasible(&self, r: &RadiusAssignment) -> Result<bool> {
        Ok(self.first_uncovered(r)?.is_none())
    }

    /// `{0} ∪ {dist(y, x) : x ∈ X}` for every server `y`.
    pub fn candidate_radii(&self) -> CandidateRadiusSet {
        CandidateRadiusSet(
            (0..self.servers.len())
                .map(|i| {
                    let mut c: Vec<f64> = std::iter::once(0.0)
                        .chain((0..self.clients.len()).map(|j| self.server_client_dist(i, j)))
                        .collect();
                    c.sort_by(f64::total_cmp);
                    c.dedup();
                    c
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile {
            version: FORMAT_VERSION,
            dim: self.dim,
            alpha: self.alpha,
            norm: self.norm,
            servers: self.servers.clone(),
            clients: self.clients.clone(),
            kappa: self.kappa.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses and validates an instance document.
    pub fn from_json(s: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(s)?;
        if file.version != FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported instance version {}", file.version)));
        }
        let inst = Instance {
            dim: file.dim,
            servers: file.servers,
            clients: file.clients,
            kappa: file.kappa,
            alpha: file.alpha,
            norm: file.norm,
        };
        inst.ensure_valid()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
        Instance::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }

    /// Short stable hash of the serialized instance.
    pub fn fingerprint(&self) -> String {
        let json = self.to_json().expect("instance serialization cannot fail");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// `sum r^alpha` with `0^alpha = 0`.
pub fn cost(r: &RadiusAssignment, alpha: f64) -> f64 {
    radii_cost(&r.0, alpha)
}

pub(crate) fn radii_cost(radii: &[f64], alpha: f64) -> f64 {
    radii.iter().filter(|r| **r > 0.0).map(|r| r.powf(alpha)).sum()
}

/// Solution document written by the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub version: u32,
    pub radii: RadiusAssignment,
    pub cost: f64,
    pub norm: Norm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<SolveTrace>,
}

impl Solution {
    pub fn new(radii: RadiusAssignment, alpha: f64, norm: Norm) -> Self {
        let cost = cost(&radii, alpha);
        Solution { version: FORMAT_VERSION, radii, cost, norm, trace: None }
    }

    pub fn from_json(s: &str) -> Result<Solution> {
        let sol: Solution = serde_json::from_str(s)?;
        if sol.version != FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported solution version {}", sol.version)));
        }
        Ok(sol)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// How client demands are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    /// Every client demands exactly `k`.
    Uniform(usize),
    /// Each client demands a uniform value in `0..=k`.
    RandomMax(usize),
}

impl KappaMode {
    fn max(self) -> usize {
        match self {
            KappaMode::Uniform(k) | KappaMode::RandomMax(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub n_clients: usize,
    pub n_servers: usize,
    pub dim: usize,
    pub kappa: KappaMode,
    pub coord_range: (f64, f64),
    pub alpha: f64,
    pub norm: Norm,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_clients: 10,
            n_servers: 6,
            dim: 2,
            kappa: KappaMode::Uniform(1),
            coord_range: (0.0, 100.0),
            alpha: 2.0,
            norm: Norm::Linf,
            seed: 0,
        }
    }
}

/// Random instance with uniform coordinates; deterministic in `params.seed`.
pub fn generate(params: &GeneratorParams) -> Result<Instance> {
    if params.kappa.max() > params.n_servers {
        return Err(Error::invalid(format!(
            "demand {} exceeds server count {}",
            params.kappa.max(),
            params.n_servers
        )));
    }
    let (lo, hi) = params.coord_range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad coordinate range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let point = |rng: &mut ChaCha8Rng| {
        Point((0..params.dim).map(|_| rng.gen_range(lo..hi)).collect())
    };
    let servers: Vec<Point> = (0..params.n_servers).map(|_| point(&mut rng)).collect();
    let clients: Vec<Point> = (0..params.n_clients).map(|_| point(&mut rng)).collect();
    let kappa = (0..params.n_clients)
        .map(|_| match params.kappa {
            KappaMode::Uniform(k) => k,
            KappaMode::RandomMax(k) => rng.gen_range(0..=k),
        })
        .collect();
    let inst = Instance {
        dim: params.dim,
        servers,
        clients,
        kappa,
        alpha: params.alpha,
        norm: params.norm,
    };
    inst.ensure_valid()?;
    Ok(inst)
}
