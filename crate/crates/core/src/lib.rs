//! Minimum-cost multi-cover with disks.
//!
//! Every server receives one disk radius so that each client lies in at least
//! `kappa` server disks, and the objective is `sum r^alpha`. The crate provides
//! the constant-factor approximation ([`cover::solve`]) built on a primal-dual
//! outer cover ([`outer_cover::solve_outer_cover`]), and exact branch-and-bound
//! oracles ([`oracle`]) for certifying results on small instances.

pub mod cover;
pub mod error;
pub mod geometry;
pub mod model;
pub mod oracle;
pub mod outer_cover;

pub use cover::{solve, solve_with, LevelRecord, SolveOptions, SolveTrace};
pub use error::{Error, Result};
pub use geometry::{Aabb, Norm, Point};
pub use model::{GeneratorParams, Instance, KappaMode, RadiusAssignment, Solution};
pub use outer_cover::OuterCoverResult;
