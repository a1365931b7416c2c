//! Shared builders for integration tests.

use mmdt_core::{Dataset, DomainTag, FeatureVector, HyperplaneSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct RandomInstance {
    pub targets: Dataset,
    pub generators: HyperplaneSet,
}

/// Random transform-learning instance with the given shape.
pub fn random_instance(
    seed: u64,
    source_dim: usize,
    target_dim: usize,
    categories: usize,
    examples: usize,
) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let generators = HyperplaneSet::new(
        (0..categories)
            .map(|_| (0..source_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
    )
    .unwrap();
    let cats = (0..categories).map(|c| format!("c{c}")).collect();
    let targets = Dataset::new(
        (0..examples)
            .map(|_| {
                let v: Vec<f64> = (0..target_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (
                    FeatureVector::dense(v).unwrap(),
                    rng.gen_range(0..categories),
                )
            })
            .collect(),
        target_dim,
        cats,
        DomainTag::Target,
    )
    .unwrap();
    RandomInstance {
        targets,
        generators,
    }
}

/// Nonnegative dual variables with a mix of zeros and positive values.
pub fn random_alphas(seed: u64, len: usize, upper: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.3) {
                0.0
            } else {
                let cap = if upper.is_finite() { upper } else { 2.0 };
                rng.gen_range(0.0..cap)
            }
        })
        .collect()
}
