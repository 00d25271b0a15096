#![allow(dead_code)]

use multicover::model::generate;
use multicover::{GeneratorParams, Instance, KappaMode, Norm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn e1() -> Instance {
    Instance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/e1.json")).unwrap()
}

/// Random instance with sizes drawn from the given ranges, seeded by `seed`.
pub fn random_instance(
    seed: u64,
    dims: &[usize],
    max_servers: usize,
    max_clients: usize,
    alphas: &[f64],
    norms: &[Norm],
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n_servers = rng.gen_range(1..=max_servers);
    let n_clients = rng.gen_range(1..=max_clients);
    let k = rng.gen_range(0..=n_servers);
    let kappa = if rng.gen_bool(0.5) { KappaMode::Uniform(k) } else { KappaMode::RandomMax(k) };
    // Small integer grids produce ties and co-located points; wide ranges do not.
    let coord_range = if rng.gen_bool(0.25) { (0.0, 4.0) } else { (-50.0, 50.0) };
    let mut inst = generate(&GeneratorParams {
        n_clients,
        n_servers,
        dim: dims[rng.gen_range(0..dims.len())],
        kappa,
        coord_range,
        alpha: alphas[rng.gen_range(0..alphas.len())],
        norm: norms[rng.gen_range(0..norms.len())],
        seed,
    })
    .unwrap();
    if coord_range.1 == 4.0 {
        for p in inst.servers.iter_mut().chain(inst.clients.iter_mut()) {
            for c in p.0.iter_mut() {
                *c = c.floor();
            }
        }
    }
    inst
}
