//! Slow, transparently-correct reference implementations used by tests.
//!
//! The transform problem is equivalent to a plain linear SVM over
//! augmented features d_ℓ = vec(v_i x̃_jᵀ). This module materializes those
//! features and solves the dense problem directly, giving an independent
//! answer to compare the implicit low-rank solver against. Desk-scale
//! sizes only; never used by the production paths.

use crate::error::{Error, Result};
use crate::svm::{self, TrainOptions};
use crate::transform::constraint_label;
use crate::types::{Dataset, FeatureVector, HyperplaneSet, RegularizerMode, SolverConfig};

/// Largest D·D̃ the oracle will materialize.
pub const ORACLE_BUDGET: usize = 10_000;

/// One augmented training example: d = vec(v_i x̃_jᵀ) with its signed
/// label and originating (hyperplane, target example) pair.
#[derive(Debug, Clone)]
pub struct AugmentedExample {
    pub d: Vec<f64>,
    pub t: f64,
    pub origin: (usize, usize),
}

/// Row-major flattening of a dense matrix.
pub fn vectorize(m: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.iter().map(Vec::len).sum());
    for row in m {
        out.extend_from_slice(row);
    }
    out
}

/// Materializes the m·ñ augmented examples in constraint order
/// (example-major: ℓ = m·j + i).
pub fn build_augmented(
    targets: &Dataset,
    v: &HyperplaneSet,
) -> Result<Vec<AugmentedExample>> {
    let (d_dim, t_dim) = (v.dim(), targets.dimension());
    if d_dim.saturating_mul(t_dim) > ORACLE_BUDGET {
        return Err(Error::BudgetExceeded {
            rows: d_dim,
            cols: t_dim,
            budget: ORACLE_BUDGET,
        });
    }
    let mut out = Vec::with_capacity(v.len() * targets.len());
    for (j, (x, cat)) in targets.examples().iter().enumerate() {
        let x_dense = x.to_dense(t_dim);
        for i in 0..v.len() {
            let mut d = Vec::with_capacity(d_dim * t_dim);
            for &vr in v.plane(i) {
                for &xc in &x_dense {
                    d.push(vr * xc);
                }
            }
            out.push(AugmentedExample {
                d,
                t: constraint_label(*cat, i),
                origin: (i, j),
            });
        }
    }
    Ok(out)
}

/// Result of a dense reference solve.
#[derive(Debug, Clone)]
pub struct NaiveSolution {
    /// Explicit transform, source dim × target dim (includes the identity
    /// part when the identity regularizer is used).
    pub w: Vec<Vec<f64>>,
    pub dual_objective: f64,
    pub converged: bool,
}

/// Solves the dense problem over explicit augmented examples.
///
/// `margins` carries the per-constraint target margins; identity-shifted
/// problems pass 1 − t_ℓ (v_i·x̃_j) and reconstruct W = I + W' afterwards.
pub fn solve_augmented(
    augmented: &[AugmentedExample],
    dims: (usize, usize),
    margins: &[f64],
    config: &SolverConfig,
) -> Result<NaiveSolution> {
    let (d_dim, t_dim) = dims;
    let features: Vec<FeatureVector> = augmented
        .iter()
        .map(|a| FeatureVector::dense(a.d.clone()))
        .collect::<Result<_>>()?;
    let signs: Vec<f64> = augmented.iter().map(|a| a.t).collect();
    let costs = vec![config.c_target; augmented.len()];
    let opts = TrainOptions {
        loss: config.loss,
        epsilon: config.epsilon,
        max_passes: config.max_passes,
        seed: config.rng_seed,
        shrinking: config.shrinking,
    };
    let sol = svm::train_binary_shifted(
        &features,
        &signs,
        &costs,
        margins,
        d_dim * t_dim,
        &opts,
    )?;
    let mut w: Vec<Vec<f64>> = (0..d_dim)
        .map(|r| sol.weights[r * t_dim..(r + 1) * t_dim].to_vec())
        .collect();
    if config.regularizer == RegularizerMode::IdentityPlus {
        for (r, row) in w.iter_mut().enumerate() {
            row[r] += 1.0;
        }
    }
    Ok(NaiveSolution {
        w,
        dual_objective: sol.dual_objective,
        converged: sol.converged,
    })
}

/// Dense reference solve of the transform problem.
pub fn naive_solve(
    targets: &Dataset,
    v: &HyperplaneSet,
    config: &SolverConfig,
) -> Result<NaiveSolution> {
    config.validate_dims(v.dim(), targets.dimension())?;
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let augmented = build_augmented(targets, v)?;
    let margins: Vec<f64> = match config.regularizer {
        RegularizerMode::Pure => vec![1.0; augmented.len()],
        // solving for W' = W − I shifts each margin by the fixed score of
        // the identity part
        RegularizerMode::IdentityPlus => augmented
            .iter()
            .map(|a| {
                let (i, j) = a.origin;
                let (x, _) = &targets.examples()[j];
                Ok(1.0 - a.t * x.dot_dense(v.plane(i))?)
            })
            .collect::<Result<_>>()?,
    };
    solve_augmented(&augmented, (v.dim(), targets.dimension()), &margins, config)
}

/// Dual objective of the dense formulation at explicit dual variables:
/// ½‖Σ α t d‖² + (λ/2)‖α‖² − Σ e α.
pub fn dense_dual_objective(
    augmented: &[AugmentedExample],
    margins: &[f64],
    lambda: f64,
    alphas: &[f64],
) -> f64 {
    let dim = augmented.first().map(|a| a.d.len()).unwrap_or(0);
    let mut w = vec![0.0; dim];
    for (a, &alpha) in augmented.iter().zip(alphas) {
        if alpha != 0.0 {
            for (wc, &dc) in w.iter_mut().zip(&a.d) {
                *wc += alpha * a.t * dc;
            }
        }
    }
    let wn: f64 = w.iter().map(|v| v * v).sum();
    let lin: f64 = alphas
        .iter()
        .zip(margins)
        .map(|(&a, &e)| 0.5 * lambda * a * a - e * a)
        .sum();
    0.5 * wn + lin
}
