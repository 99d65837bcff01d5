//! Shared fixtures for the benchmark targets.

use rand::Rng;
use revmix_core::rng::seeded;
use revmix_core::walk::FunctionVector;
use revmix_core::{Circuit, Result};

/// Deterministic dense test vector with entries in [-1, 1].
pub fn random_vector(n: usize, k: usize, seed: u64) -> Result<FunctionVector> {
    let mut rng = seeded(seed);
    let dim = 1usize << (n * k);
    FunctionVector::new(n, k, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Deterministic random circuit for evaluation benchmarks.
pub fn random_circuit(n: usize, gates: usize, seed: u64) -> Result<Circuit> {
    use revmix_core::circuit::{sample_circuit, Arch, GateDist};
    let mut rng = seeded(seed);
    sample_circuit(Arch::Generic, GateDist::Alternating, n, gates, &mut rng)
}
