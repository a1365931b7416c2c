//! Synthetic domain-shift benchmarks.
//!
//! Source classes are Gaussian clusters around random centers; target
//! points are drawn from the same clusters and pushed through a hidden
//! linear (or affine) map plus noise. The inverse direction of the map is
//! recorded so that a transform recovering it exists. Held-out categories
//! receive source examples and target test points but no target training
//! data. Everything is deterministic under a fixed seed.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{Dataset, DomainTag, FeatureVector};

/// The hidden source-to-target map family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    /// No shift at all; source and target distributions coincide.
    Identity,
    /// Random orthogonal map, equal dimensions.
    Rotation,
    /// Random well-conditioned linear map, equal dimensions.
    RandomLinear,
    /// Random linear map plus a translation.
    LinearPlusBias,
    /// Orthonormal embedding or projection between unequal dimensions.
    DimensionChange,
}

/// Generator configuration.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub source_per_class: usize,
    pub target_per_class: usize,
    pub test_per_class: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    pub categories: usize,
    /// Scale of the Gaussian spread of class centers.
    pub center_spread: f64,
    /// Within-class noise scale, also added after the shift.
    pub noise: f64,
    pub shift: ShiftKind,
    /// Global class indices that get no target training data.
    pub heldout: BTreeSet<usize>,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            source_per_class: 20,
            target_per_class: 5,
            test_per_class: 20,
            source_dim: 10,
            target_dim: 10,
            categories: 4,
            center_spread: 3.0,
            noise: 1.0,
            shift: ShiftKind::Rotation,
            heldout: BTreeSet::new(),
            rng_seed: 0,
        }
    }
}

/// The hidden map and its recorded inverse direction.
#[derive(Debug, Clone)]
pub struct ShiftMap {
    /// A (target dim × source dim): x̃ = A·x + offset + noise.
    pub to_target: Vec<Vec<f64>>,
    pub to_target_offset: Vec<f64>,
    /// M (source dim × target dim): x ≈ M·x̃ + offset.
    pub to_source: Vec<Vec<f64>>,
    pub to_source_offset: Vec<f64>,
}

impl ShiftMap {
    pub fn apply_to_source_point(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.to_target, x)
            .iter()
            .zip(&self.to_target_offset)
            .map(|(v, b)| v + b)
            .collect()
    }

    pub fn apply_to_target_point(&self, x: &[f64]) -> Vec<f64> {
        matvec(&self.to_source, x)
            .iter()
            .zip(&self.to_source_offset)
            .map(|(v, b)| v + b)
            .collect()
    }
}

/// Generated splits. `source_train`, `target_train`, and the test sets
/// cover the shared categories; held-out categories appear in
/// `heldout_source` and `heldout_target_test` only.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub source_train: Dataset,
    pub source_test: Dataset,
    pub target_train: Dataset,
    pub target_test: Dataset,
    pub heldout_source: Option<Dataset>,
    pub heldout_target_test: Option<Dataset>,
    pub shift: ShiftMap,
}

fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (rows, inner, cols) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; cols]; rows];
    for r in 0..rows {
        for i in 0..inner {
            let av = a[r][i];
            if av != 0.0 {
                for c in 0..cols {
                    out[r][c] += av * b[i][c];
                }
            }
        }
    }
    out
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (rows, cols) = (m.len(), m[0].len());
    let mut out = vec![vec![0.0; rows]; cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c][r] = m[r][c];
        }
    }
    out
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for (r, row) in m.iter_mut().enumerate() {
        row[r] = 1.0;
    }
    m
}

/// Random orthogonal matrix via Gram-Schmidt on Gaussian rows.
fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for prev in &rows {
            let proj: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (vi, pi) in v.iter_mut().zip(prev) {
                *vi -= proj * pi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // numerically dependent draw, retry
        }
        for vi in &mut v {
            *vi /= norm;
        }
        rows.push(v);
    }
    rows
}

fn build_shift(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<ShiftMap> {
    let (d, dt) = (cfg.source_dim, cfg.target_dim);
    let square = |kind: &str| -> Result<()> {
        if d != dt {
            return Err(Error::InvalidConfig(format!(
                "{kind} shift requires equal dimensions, got source {d} and target {dt}"
            )));
        }
        Ok(())
    };
    match cfg.shift {
        ShiftKind::Identity => {
            square("identity")?;
            Ok(ShiftMap {
                to_target: identity(d),
                to_target_offset: vec![0.0; d],
                to_source: identity(d),
                to_source_offset: vec![0.0; d],
            })
        }
        ShiftKind::Rotation => {
            square("rotation")?;
            let q = random_orthogonal(d, rng);
            let qt = transpose(&q);
            Ok(ShiftMap {
                to_target: q,
                to_target_offset: vec![0.0; d],
                to_source: qt,
                to_source_offset: vec![0.0; d],
            })
        }
        ShiftKind::RandomLinear | ShiftKind::LinearPlusBias => {
            square("linear")?;
            let q1 = random_orthogonal(d, rng);
            let q2 = random_orthogonal(d, rng);
            let scales: Vec<f64> = (0..d).map(|_| rng.gen_range(0.7..1.4)).collect();
            let mut mid = q2.clone();
            for (row, &s) in mid.iter_mut().zip(&scales) {
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
            // A = Q1 diag(s) Q2, inverse = Q2ᵀ diag(1/s) Q1ᵀ
            let a = matmul(&q1, &mid);
            let mut mid_inv = transpose(&q1);
            for (row, &s) in mid_inv.iter_mut().zip(&scales) {
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
            let inv = matmul(&transpose(&q2), &mid_inv);
            let b: Vec<f64> = if cfg.shift == ShiftKind::LinearPlusBias {
                (0..d)
                    .map(|_| 0.5 * cfg.center_spread * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            } else {
                vec![0.0; d]
            };
            let minus_inv_b: Vec<f64> = matvec(&inv, &b).iter().map(|v| -v).collect();
            Ok(ShiftMap {
                to_target: a,
                to_target_offset: b,
                to_source: inv,
                to_source_offset: minus_inv_b,
            })
        }
        ShiftKind::DimensionChange => {
            if dt >= d {
                // orthonormal columns: x is exactly recoverable via Aᵀ
                let q = random_orthogonal(dt, rng);
                let a: Vec<Vec<f64>> = q.iter().map(|row| row[..d].to_vec()).collect();
                let at = transpose(&a);
                Ok(ShiftMap {
                    to_target: a,
                    to_target_offset: vec![0.0; dt],
                    to_source: at,
                    to_source_offset: vec![0.0; d],
                })
            } else {
                // orthonormal rows: projection, Aᵀ is the pseudo-inverse
                let q = random_orthogonal(d, rng);
                let a: Vec<Vec<f64>> = q[..dt].to_vec();
                let at = transpose(&a);
                Ok(ShiftMap {
                    to_target: a,
                    to_target_offset: vec![0.0; dt],
                    to_source: at,
                    to_source_offset: vec![0.0; d],
                })
            }
        }
    }
}

/// Generates a source/target dataset pair with a hidden shift.
pub fn make_shifted_pair(cfg: &SynthConfig) -> Result<SynthOutput> {
    if cfg.categories < 2 {
        return Err(Error::TooFewCategories(cfg.categories));
    }
    if cfg.source_dim == 0 || cfg.target_dim == 0 {
        return Err(Error::InvalidConfig("dimensions must be positive".into()));
    }
    if cfg.source_per_class == 0 || cfg.target_per_class == 0 {
        return Err(Error::InvalidConfig(
            "per-class counts must be positive".into(),
        ));
    }
    if let Some(&bad) = cfg.heldout.iter().find(|&&c| c >= cfg.categories) {
        return Err(Error::InvalidConfig(format!(
            "held-out class {bad} out of range for {} categories",
            cfg.categories
        )));
    }
    let shared: Vec<usize> = (0..cfg.categories)
        .filter(|c| !cfg.heldout.contains(c))
        .collect();
    if shared.len() < 2 {
        return Err(Error::TooFewCategories(shared.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let centers: Vec<Vec<f64>> = (0..cfg.categories)
        .map(|_| {
            (0..cfg.source_dim)
                .map(|_| cfg.center_spread * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let shift = build_shift(cfg, &mut rng)?;

    let draw_source = |class: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        centers[class]
            .iter()
            .map(|&c| c + cfg.noise * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let name = |class: usize| format!("c{class}");

    let mut source_train = Vec::new();
    let mut source_test = Vec::new();
    let mut target_train = Vec::new();
    let mut target_test = Vec::new();
    let mut heldout_source = Vec::new();
    let mut heldout_target_test = Vec::new();

    // shared classes first, held-out classes after, all in ascending order
    let ordered: Vec<(usize, bool)> = shared
        .iter()
        .map(|&c| (c, false))
        .chain(cfg.heldout.iter().map(|&c| (c, true)))
        .collect();

    for (local, &(class, held)) in ordered.iter().enumerate() {
        let local_held = local - if held { shared.len() } else { 0 };
        for _ in 0..cfg.source_per_class {
            let x = draw_source(class, &mut rng);
            if held {
                heldout_source.push((FeatureVector::Dense(x), local_held));
            } else {
                source_train.push((FeatureVector::Dense(x), local));
            }
        }
        for _ in 0..cfg.test_per_class {
            let x = draw_source(class, &mut rng);
            if !held {
                source_test.push((FeatureVector::Dense(x), local));
            }
        }
        if !held {
            for _ in 0..cfg.target_per_class {
                let u = draw_source(class, &mut rng);
                let xt: Vec<f64> = shift
                    .apply_to_source_point(&u)
                    .iter()
                    .map(|&v| v + cfg.noise * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                target_train.push((FeatureVector::Dense(xt), local));
            }
        }
        for _ in 0..cfg.test_per_class {
            let u = draw_source(class, &mut rng);
            let xt: Vec<f64> = shift
                .apply_to_source_point(&u)
                .iter()
                .map(|&v| v + cfg.noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            if held {
                heldout_target_test.push((FeatureVector::Dense(xt), local_held));
            } else {
                target_test.push((FeatureVector::Dense(xt), local));
            }
        }
    }

    let shared_names: Vec<String> = shared.iter().map(|&c| name(c)).collect();
    let heldout_names: Vec<String> = cfg.heldout.iter().map(|&c| name(c)).collect();

    let source_train = Dataset::new(
        source_train,
        cfg.source_dim,
        shared_names.clone(),
        DomainTag::Source,
    )?;
    let source_test = Dataset::new(
        source_test,
        cfg.source_dim,
        shared_names.clone(),
        DomainTag::Source,
    )?;
    let target_train = Dataset::new(
        target_train,
        cfg.target_dim,
        shared_names.clone(),
        DomainTag::Target,
    )?;
    let target_test = Dataset::new(
        target_test,
        cfg.target_dim,
        shared_names,
        DomainTag::Target,
    )?;
    let heldout_source = if heldout_source.is_empty() {
        None
    } else {
        Some(Dataset::new(
            heldout_source,
            cfg.source_dim,
            heldout_names.clone(),
            DomainTag::Source,
        )?)
    };
    let heldout_target_test = if heldout_target_test.is_empty() {
        None
    } else {
        Some(Dataset::new(
            heldout_target_test,
            cfg.target_dim,
            heldout_names,
            DomainTag::Target,
        )?)
    };

    Ok(SynthOutput {
        source_train,
        source_test,
        target_train,
        target_test,
        heldout_source,
        heldout_target_test,
        shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{self, TrainOptions};

    #[test]
    fn fixed_seed_reproduces_exactly() {
        let cfg = SynthConfig {
            categories: 3,
            source_per_class: 4,
            target_per_class: 3,
            test_per_class: 2,
            source_dim: 5,
            target_dim: 5,
            rng_seed: 42,
            ..SynthConfig::default()
        };
        let a = make_shifted_pair(&cfg).unwrap();
        let b = make_shifted_pair(&cfg).unwrap();
        for (x, y) in a
            .source_train
            .examples()
            .iter()
            .chain(a.target_train.examples())
            .zip(b.source_train.examples().iter().chain(b.target_train.examples()))
        {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1, y.1);
        }
        assert_eq!(a.shift.to_target, b.shift.to_target);
    }

    #[test]
    fn identity_shift_without_noise_needs_no_transform() {
        let cfg = SynthConfig {
            shift: ShiftKind::Identity,
            noise: 0.0,
            categories: 3,
            source_per_class: 5,
            target_per_class: 5,
            test_per_class: 3,
            source_dim: 4,
            target_dim: 4,
            center_spread: 5.0,
            rng_seed: 7,
            ..SynthConfig::default()
        };
        let out = make_shifted_pair(&cfg).unwrap();
        assert_eq!(out.shift.to_target, identity(4));
        // zero noise pins every draw to its class center, so a classifier
        // trained on source separates raw target points perfectly
        let planes = svm::train_one_vs_all(
            &out.source_train.with_bias_feature(),
            10.0,
            &TrainOptions {
                epsilon: 1e-6,
                max_passes: 10_000,
                ..TrainOptions::default()
            },
        )
        .unwrap();
        for (x, cat) in out.target_test.examples() {
            let (pred, _) = svm::ova_predict(&planes, &x.with_appended(1.0)).unwrap();
            assert_eq!(pred, *cat);
        }
    }

    #[test]
    fn rotation_inverse_recovers_points() {
        let cfg = SynthConfig {
            shift: ShiftKind::Rotation,
            source_dim: 6,
            target_dim: 6,
            rng_seed: 3,
            ..SynthConfig::default()
        };
        let out = make_shifted_pair(&cfg).unwrap();
        let x = vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.25];
        let xt = out.shift.apply_to_source_point(&x);
        let back = out.shift.apply_to_target_point(&xt);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn affine_inverse_recovers_points() {
        let cfg = SynthConfig {
            shift: ShiftKind::LinearPlusBias,
            source_dim: 5,
            target_dim: 5,
            rng_seed: 11,
            ..SynthConfig::default()
        };
        let out = make_shifted_pair(&cfg).unwrap();
        let x = vec![0.3, -1.2, 2.0, 0.0, 1.1];
        let back = out.shift.apply_to_target_point(&out.shift.apply_to_source_point(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn dimension_change_embedding_recovers_points() {
        let cfg = SynthConfig {
            shift: ShiftKind::DimensionChange,
            source_dim: 4,
            target_dim: 7,
            rng_seed: 5,
            ..SynthConfig::default()
        };
        let out = make_shifted_pair(&cfg).unwrap();
        assert_eq!(out.target_train.dimension(), 7);
        let x = vec![1.0, 2.0, -0.5, 0.75];
        let back = out.shift.apply_to_target_point(&out.shift.apply_to_source_point(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn heldout_classes_have_no_target_training_data() {
        let cfg = SynthConfig {
            categories: 5,
            heldout: [1usize, 3].into_iter().collect(),
            source_per_class: 3,
            target_per_class: 2,
            test_per_class: 2,
            source_dim: 4,
            target_dim: 4,
            rng_seed: 9,
            ..SynthConfig::default()
        };
        let out = make_shifted_pair(&cfg).unwrap();
        assert_eq!(out.source_train.categories(), &["c0", "c2", "c4"]);
        assert_eq!(out.target_train.categories(), &["c0", "c2", "c4"]);
        let held = out.heldout_source.unwrap();
        assert_eq!(held.categories(), &["c1", "c3"]);
        assert_eq!(held.len(), 6);
        let held_test = out.heldout_target_test.unwrap();
        assert_eq!(held_test.categories(), &["c1", "c3"]);
        assert_eq!(held_test.len(), 4);
    }

    #[test]
    fn shift_kind_dimension_validation() {
        let cfg = SynthConfig {
            shift: ShiftKind::Rotation,
            source_dim: 3,
            target_dim: 4,
            ..SynthConfig::default()
        };
        assert!(make_shifted_pair(&cfg).is_err());
    }
}
