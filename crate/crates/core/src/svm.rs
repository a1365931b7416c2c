//! Dual coordinate descent for linear SVMs.
//!
//! Solves min_w ½‖w‖² + Σ_i c_i max(0, e_i − t_i w·x_i)^p through its dual
//!
//!   min_{α ≥ 0} ½ αᵀQ̄α − eᵀα,   Q̄_{ij} = t_i t_j x_i·x_j + λ_i δ[i=j]
//!
//! one coordinate at a time, keeping w = Σ α_i t_i x_i explicit so each
//! step costs time linear in the example's stored entries. For p = 2 the
//! diagonal term is λ_i = 1/(2c_i) and α is unbounded above; for p = 1 the
//! diagonal is zero and α_i ≤ c_i. Variables pinned at a bound are shrunk
//! out of the sweep; a full verification pass precedes termination.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{Dataset, FeatureVector, HyperplaneSet, Loss};

/// Options for one binary solve.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub loss: Loss,
    /// Stop when the projected-gradient gap over the active set falls below this.
    pub epsilon: f64,
    pub max_passes: usize,
    pub seed: u64,
    pub shrinking: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            loss: Loss::L2,
            epsilon: 0.1,
            max_passes: 1000,
            seed: 0,
            shrinking: true,
        }
    }
}

/// Result of a binary solve.
#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub weights: Vec<f64>,
    pub passes: usize,
    /// Projected-gradient gap observed on the last pass.
    pub pg_gap: f64,
    pub converged: bool,
    /// Final value of the minimized dual objective ½αᵀQ̄α − eᵀα.
    pub dual_objective: f64,
    /// Dual objective after each full pass.
    pub dual_trace: Vec<f64>,
    /// Examples excluded up front because their feature vector is zero.
    pub skipped: usize,
}

pub(crate) struct DualProblem<'a> {
    pub features: &'a [FeatureVector],
    pub signs: &'a [f64],
    pub costs: &'a [f64],
    /// Per-example target margins e_i; `None` means all ones.
    pub margins: Option<&'a [f64]>,
    pub dim: usize,
}

/// Trains a binary classifier with a uniform cost on every example.
pub fn train_binary(
    features: &[FeatureVector],
    signs: &[f64],
    cost: f64,
    opts: &TrainOptions,
) -> Result<BinarySolution> {
    let costs = vec![cost; features.len()];
    train_binary_weighted(features, signs, &costs, opts)
}

/// Trains a binary classifier with an individual cost per example.
pub fn train_binary_weighted(
    features: &[FeatureVector],
    signs: &[f64],
    costs: &[f64],
    opts: &TrainOptions,
) -> Result<BinarySolution> {
    let dim = features.iter().map(FeatureVector::dim).max().unwrap_or(0);
    solve_dual_cd(
        &DualProblem {
            features,
            signs,
            costs,
            margins: None,
            dim,
        },
        opts,
    )
}

/// Binary solve with per-example target margins. Used by the dense
/// reference solver to express identity-shifted constraints.
pub(crate) fn train_binary_shifted(
    features: &[FeatureVector],
    signs: &[f64],
    costs: &[f64],
    margins: &[f64],
    dim: usize,
    opts: &TrainOptions,
) -> Result<BinarySolution> {
    solve_dual_cd(
        &DualProblem {
            features,
            signs,
            costs,
            margins: Some(margins),
            dim,
        },
        opts,
    )
}

pub(crate) fn solve_dual_cd(p: &DualProblem, opts: &TrainOptions) -> Result<BinarySolution> {
    let l = p.features.len();
    if l == 0 {
        return Err(Error::EmptyDataset);
    }
    if p.signs.len() != l || p.costs.len() != l {
        return Err(Error::InvalidConfig(
            "features, signs, and costs must have equal lengths".into(),
        ));
    }
    if let Some(m) = p.margins {
        if m.len() != l {
            return Err(Error::InvalidConfig(
                "margins must match the number of examples".into(),
            ));
        }
    }
    for &s in p.signs {
        if s != 1.0 && s != -1.0 {
            return Err(Error::InvalidConfig(format!("sign must be +1 or -1, got {s}")));
        }
    }
    for &c in p.costs {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cost must be positive and finite, got {c}"
            )));
        }
    }

    let margin = |i: usize| p.margins.map_or(1.0, |m| m[i]);
    let lambda: Vec<f64> = p.costs.iter().map(|&c| opts.loss.lambda(c)).collect();
    let upper: Vec<f64> = p.costs.iter().map(|&c| opts.loss.upper_bound(c)).collect();
    let sq_norms: Vec<f64> = p.features.iter().map(FeatureVector::squared_norm).collect();

    let mut w = vec![0.0; p.dim];
    let mut alpha = vec![0.0; l];

    // A zero feature vector can never move w; its dual variable is left at
    // zero and the example is dropped from the sweep.
    let mut index: Vec<usize> = (0..l).filter(|&i| sq_norms[i] > 0.0).collect();
    let skipped = l - index.len();

    let dual_value = |w: &[f64], alpha: &[f64]| -> f64 {
        let wn: f64 = w.iter().map(|v| v * v).sum();
        let reg: f64 = alpha
            .iter()
            .enumerate()
            .map(|(i, &a)| 0.5 * lambda[i] * a * a - margin(i) * a)
            .sum();
        0.5 * wn + reg
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut active_size = index.len();
    let mut pgmax_old = f64::INFINITY;
    let mut pgmin_old = f64::NEG_INFINITY;
    let mut dual_trace = Vec::new();
    let mut passes = 0;
    let mut pg_gap = 0.0;
    let mut converged = index.is_empty();

    while passes < opts.max_passes && !converged {
        passes += 1;
        let mut pgmax_new = f64::NEG_INFINITY;
        let mut pgmin_new = f64::INFINITY;
        index[..active_size].shuffle(&mut rng);

        let mut s = 0;
        while s < active_size {
            let i = index[s];
            let ti = p.signs[i];
            let g = ti * p.features[i].dot_dense(&w)? - margin(i) + lambda[i] * alpha[i];

            let mut pg = 0.0;
            if alpha[i] == 0.0 {
                if opts.shrinking && g > pgmax_old {
                    active_size -= 1;
                    index.swap(s, active_size);
                    continue;
                }
                if g < 0.0 {
                    pg = g;
                }
            } else if alpha[i] == upper[i] {
                if opts.shrinking && g < pgmin_old {
                    active_size -= 1;
                    index.swap(s, active_size);
                    continue;
                }
                if g > 0.0 {
                    pg = g;
                }
            } else {
                pg = g;
            }

            pgmax_new = pgmax_new.max(pg);
            pgmin_new = pgmin_new.min(pg);

            if pg.abs() > 1e-12 {
                let old = alpha[i];
                let step = (old - g / (sq_norms[i] + lambda[i])).clamp(0.0, upper[i]);
                alpha[i] = step;
                p.features[i].add_scaled_to((step - old) * ti, &mut w);
            }
            s += 1;
        }

        dual_trace.push(dual_value(&w, &alpha));
        pg_gap = pgmax_new - pgmin_new;

        if pg_gap <= opts.epsilon {
            if active_size == index.len() {
                converged = true;
            } else {
                // verification pass over everything that was shrunk away
                active_size = index.len();
                pgmax_old = f64::INFINITY;
                pgmin_old = f64::NEG_INFINITY;
            }
        } else {
            pgmax_old = if pgmax_new <= 0.0 {
                f64::INFINITY
            } else {
                pgmax_new
            };
            pgmin_old = if pgmin_new >= 0.0 {
                f64::NEG_INFINITY
            } else {
                pgmin_new
            };
        }
    }

    let dual_objective = dual_value(&w, &alpha);
    Ok(BinarySolution {
        weights: w,
        passes,
        pg_gap,
        converged,
        dual_objective,
        dual_trace,
        skipped,
    })
}

/// Primal objective ½‖w‖² + Σ_i c_i max(0, 1 − t_i w·x_i)^p.
pub fn primal_objective(
    w: &[f64],
    features: &[FeatureVector],
    signs: &[f64],
    costs: &[f64],
    loss: Loss,
) -> Result<f64> {
    let mut hinge = 0.0;
    for ((x, &t), &c) in features.iter().zip(signs).zip(costs) {
        let h = (1.0 - t * x.dot_dense(w)?).max(0.0);
        hinge += c * h.powi(loss.exponent());
    }
    let wn: f64 = w.iter().map(|v| v * v).sum();
    Ok(0.5 * wn + hinge)
}

/// Trains K one-vs-all classifiers, one per category of the dataset.
///
/// The binary problems are independent and run in parallel; class k
/// derives its own seed as `opts.seed + k`, so the result does not depend
/// on scheduling.
pub fn train_one_vs_all(
    data: &Dataset,
    cost: f64,
    opts: &TrainOptions,
) -> Result<HyperplaneSet> {
    let features: Vec<FeatureVector> = data.examples().iter().map(|(f, _)| f.clone()).collect();
    let labels: Vec<usize> = data.examples().iter().map(|(_, c)| *c).collect();
    let costs = vec![cost; features.len()];
    train_one_vs_all_weighted(
        &features,
        &labels,
        data.category_count(),
        &costs,
        data.dimension(),
        opts,
    )
}

/// One-vs-all training over explicit rows with per-example costs.
pub fn train_one_vs_all_weighted(
    features: &[FeatureVector],
    labels: &[usize],
    categories: usize,
    costs: &[f64],
    dim: usize,
    opts: &TrainOptions,
) -> Result<HyperplaneSet> {
    if categories < 2 {
        return Err(Error::TooFewCategories(categories));
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != features.len() || costs.len() != features.len() {
        return Err(Error::InvalidConfig(
            "features, labels, and costs must have equal lengths".into(),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= categories) {
        return Err(Error::InvalidConfig(format!(
            "label {bad} out of range for {categories} categories"
        )));
    }

    let planes: Result<Vec<Vec<f64>>> = (0..categories)
        .into_par_iter()
        .map(|k| {
            let signs: Vec<f64> = labels
                .iter()
                .map(|&c| if c == k { 1.0 } else { -1.0 })
                .collect();
            let class_opts = TrainOptions {
                seed: opts.seed.wrapping_add(k as u64),
                ..opts.clone()
            };
            let sol = solve_dual_cd(
                &DualProblem {
                    features,
                    signs: &signs,
                    costs,
                    margins: None,
                    dim,
                },
                &class_opts,
            )?;
            Ok(sol.weights)
        })
        .collect();
    HyperplaneSet::new(planes?)
}

/// Argmax prediction over a hyperplane set; ties go to the smallest index.
pub fn ova_predict(planes: &HyperplaneSet, x: &FeatureVector) -> Result<(usize, Vec<f64>)> {
    let mut scores = Vec::with_capacity(planes.len());
    for i in 0..planes.len() {
        scores.push(x.dot_dense(planes.plane(i))?);
    }
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    Ok((best, scores))
}
