//! Transform learning by dual coordinate descent over an implicit
//! low-rank representation.
//!
//! The problem min_W ½‖W‖² + C̃ Σ_{i,j} max(0, 1 − t_{ij} v_i·W x̃_j)^p is
//! a linear SVM over augmented features vec(v_i x̃_jᵀ). Instead of touching
//! those D·D̃ coordinates, the solver keeps W = Σ_i v_i β_iᵀ implicit and
//! works with the m coefficient rows β_i, the generator Gram matrix
//! ρ_{i,i'} = v_i·v_{i'}, and cached target norms q_j = ‖x̃_j‖²:
//!
//!   score       v_i·W x̃_j = Σ_{i'} ρ_{i,i'} (β_{i'}·x̃_j)
//!   curvature   ‖v_i x̃_jᵀ‖² = q_j ρ_{i,i}
//!   update      β_i ← β_i + Δα t_{ij} x̃_j
//!
//! so one coordinate step costs O(m) on cached products plus O(D̃) for the
//! β update, independent of the source side. With the identity regularizer
//! ½‖W − I‖² the same solver runs on margin-shifted constraints and
//! W = I + Σ_i v_i β_iᵀ can reach full rank.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{
    Dataset, DualState, FeatureVector, HyperplaneSet, LowRankTransform, RegularizerMode,
    SolverConfig,
};

/// Default cap on materialized transform size, in matrix entries.
pub const DEFAULT_MATERIALIZE_BUDGET: usize = 16_777_216;

/// Generator Gram matrix R with R[i][i'] = V[i]·V[i'].
pub fn compute_rho(v: &HyperplaneSet) -> Vec<Vec<f64>> {
    let m = v.len();
    let mut rho = vec![vec![0.0; m]; m];
    for i in 0..m {
        for ip in i..m {
            let r: f64 = v
                .plane(i)
                .iter()
                .zip(v.plane(ip))
                .map(|(a, b)| a * b)
                .sum();
            rho[i][ip] = r;
            rho[ip][i] = r;
        }
    }
    rho
}

/// Signed one-vs-all constraint label: +1 when the example's category
/// matches the hyperplane index, −1 otherwise.
pub fn constraint_label(category: usize, plane: usize) -> f64 {
    if category == plane {
        1.0
    } else {
        -1.0
    }
}

impl LowRankTransform {
    /// Builds a transform from explicit parts; R is computed from the
    /// generators.
    pub fn new(
        generators: HyperplaneSet,
        betas: Vec<Vec<f64>>,
        mode: RegularizerMode,
        target_dim: usize,
    ) -> Result<Self> {
        if betas.len() != generators.len() {
            return Err(Error::InvalidConfig(format!(
                "{} beta rows for {} generators",
                betas.len(),
                generators.len()
            )));
        }
        for b in &betas {
            if b.len() != target_dim {
                return Err(Error::DimensionMismatch {
                    expected: target_dim,
                    got: b.len(),
                });
            }
        }
        if mode == RegularizerMode::IdentityPlus && generators.dim() != target_dim {
            return Err(Error::InvalidConfig(format!(
                "identity regularizer requires equal dimensions, got source {} and target {}",
                generators.dim(),
                target_dim
            )));
        }
        let rho = compute_rho(&generators);
        Ok(LowRankTransform {
            generators,
            betas,
            rho,
            mode,
            target_dim,
        })
    }

    /// Transform with all β rows zero: the zero map in pure mode, the
    /// identity map with the identity regularizer.
    pub fn trivial(
        generators: HyperplaneSet,
        mode: RegularizerMode,
        target_dim: usize,
    ) -> Result<Self> {
        let m = generators.len();
        Self::new(generators, vec![vec![0.0; target_dim]; m], mode, target_dim)
    }

    /// Squared Frobenius norm of the low-rank part Σ_i v_i β_iᵀ, computed
    /// as Σ_{i,i'} ρ_{i,i'} β_i·β_{i'}. Equals ‖W‖² in pure mode and
    /// ‖W − I‖² with the identity regularizer.
    pub fn low_rank_frobenius_sq(&self) -> f64 {
        let m = self.generators.len();
        let mut total = 0.0;
        for i in 0..m {
            for ip in 0..m {
                let bb: f64 = self.betas[i]
                    .iter()
                    .zip(&self.betas[ip])
                    .map(|(a, b)| a * b)
                    .sum();
                total += self.rho[i][ip] * bb;
            }
        }
        total
    }

    /// Explicit W as dense rows, within the default size budget.
    pub fn materialize(&self) -> Result<Vec<Vec<f64>>> {
        self.materialize_with_budget(DEFAULT_MATERIALIZE_BUDGET)
    }

    /// Explicit W as dense rows (source dim × target dim).
    pub fn materialize_with_budget(&self, budget: usize) -> Result<Vec<Vec<f64>>> {
        let (rows, cols) = (self.source_dim(), self.target_dim);
        if rows.saturating_mul(cols) > budget {
            return Err(Error::BudgetExceeded { rows, cols, budget });
        }
        let mut w = vec![vec![0.0; cols]; rows];
        for (v, beta) in self.generators.planes().iter().zip(&self.betas) {
            for (r, &vr) in v.iter().enumerate() {
                if vr == 0.0 {
                    continue;
                }
                for (c, &bc) in beta.iter().enumerate() {
                    w[r][c] += vr * bc;
                }
            }
        }
        if self.mode == RegularizerMode::IdentityPlus {
            for r in 0..rows {
                w[r][r] += 1.0;
            }
        }
        Ok(w)
    }

    /// Maps a target-space vector into the source space: W x̃ computed as
    /// Σ_i v_i (β_i·x̃), plus x̃ itself with the identity regularizer.
    pub fn apply_to_target(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.dim() > self.target_dim {
            return Err(Error::DimensionMismatch {
                expected: self.target_dim,
                got: x.dim(),
            });
        }
        let mut out = vec![0.0; self.source_dim()];
        for (v, beta) in self.generators.planes().iter().zip(&self.betas) {
            let coeff = x.dot_dense(beta)?;
            if coeff != 0.0 {
                for (o, &vr) in out.iter_mut().zip(v) {
                    *o += coeff * vr;
                }
            }
        }
        if self.mode == RegularizerMode::IdentityPlus {
            for (i, val) in x.iter_entries() {
                out[i] += val;
            }
        }
        Ok(out)
    }

    /// Maps a source-space hyperplane into the target space: Wᵀu computed
    /// as Σ_{i'} (u·v_{i'}) β_{i'}, plus u itself with the identity
    /// regularizer. Classifying with the result on raw target points
    /// equals classifying with u on transformed points.
    pub fn map_hyperplane(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim(),
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.target_dim];
        for (v, beta) in self.generators.planes().iter().zip(&self.betas) {
            let coeff: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            if coeff != 0.0 {
                for (o, &bc) in out.iter_mut().zip(beta) {
                    *o += coeff * bc;
                }
            }
        }
        if self.mode == RegularizerMode::IdentityPlus {
            for (o, &uv) in out.iter_mut().zip(u) {
                *o += uv;
            }
        }
        Ok(out)
    }
}

/// Constraint score v_i·W x̃ computed through the low-rank identity,
/// refreshing the β·x̃ products. The solver's inner loop uses the cached
/// O(m) version of the same quantity.
pub fn constraint_score(t: &LowRankTransform, i: usize, x: &FeatureVector) -> Result<f64> {
    let m = t.generator_count();
    if i >= m {
        return Err(Error::InvalidConfig(format!(
            "hyperplane index {i} out of range for {m} generators"
        )));
    }
    let mut s = 0.0;
    for ip in 0..m {
        let prod = x.dot_dense(&t.betas[ip])?;
        s += t.rho[i][ip] * prod;
    }
    if t.mode == RegularizerMode::IdentityPlus {
        s += x.dot_dense(t.generators.plane(i))?;
    }
    Ok(s)
}

/// Rebuilds every β row from dual variables: β_i = Σ_j α_{(i,j)} t_{ij} x̃_j.
pub fn recompute_betas(alphas: &[f64], targets: &Dataset, m: usize) -> Result<Vec<Vec<f64>>> {
    let nt = targets.len();
    if alphas.len() != m * nt {
        return Err(Error::InvalidConfig(format!(
            "{} dual variables for {m} planes x {nt} examples",
            alphas.len()
        )));
    }
    let mut betas = vec![vec![0.0; targets.dimension()]; m];
    for (j, (x, cat)) in targets.examples().iter().enumerate() {
        for (i, beta) in betas.iter_mut().enumerate() {
            let a = alphas[j * m + i];
            if a != 0.0 {
                x.add_scaled_to(a * constraint_label(*cat, i), beta);
            }
        }
    }
    Ok(betas)
}

/// Gradient and projected gradient of the dual objective at constraint
/// (i, j), computed without the solver cache.
pub fn projected_gradient(
    t: &LowRankTransform,
    state: &DualState,
    targets: &Dataset,
    i: usize,
    j: usize,
) -> Result<(f64, f64)> {
    let m = t.generator_count();
    let (x, cat) = &targets.examples()[j];
    let s = constraint_score(t, i, x)?;
    let label = constraint_label(*cat, i);
    let alpha = state.alphas[j * m + i];
    let g = label * s + state.lambda * alpha - 1.0;
    let pg = if alpha == 0.0 {
        g.min(0.0)
    } else if alpha == state.upper {
        g.max(0.0)
    } else {
        g
    };
    Ok((g, pg))
}

/// Dual objective ½‖W_lr‖² + (λ/2)‖α‖² − Σ_ℓ e_ℓ α_ℓ evaluated through the
/// low-rank identities, where W_lr is the low-rank part and e_ℓ shifts to
/// 1 − t_ℓ (v_i·x̃_j) under the identity regularizer.
pub fn dual_objective(t: &LowRankTransform, state: &DualState, targets: &Dataset) -> Result<f64> {
    let m = t.generator_count();
    let mut value = 0.5 * t.low_rank_frobenius_sq();
    for (j, (x, cat)) in targets.examples().iter().enumerate() {
        for i in 0..m {
            let a = state.alphas[j * m + i];
            value += 0.5 * state.lambda * a * a;
            if a != 0.0 {
                let mut e = 1.0;
                if t.mode == RegularizerMode::IdentityPlus {
                    e -= constraint_label(*cat, i) * x.dot_dense(t.generators.plane(i))?;
                }
                value -= e * a;
            }
        }
    }
    Ok(value)
}

/// Dual objective as a function of the dual variables alone; β rows are
/// rebuilt from α before evaluating. Suitable for finite differencing.
pub fn dual_objective_for_alphas(
    targets: &Dataset,
    generators: &HyperplaneSet,
    config: &SolverConfig,
    alphas: &[f64],
) -> Result<f64> {
    let m = generators.len();
    let betas = recompute_betas(alphas, targets, m)?;
    let t = LowRankTransform::new(
        generators.clone(),
        betas,
        config.regularizer,
        targets.dimension(),
    )?;
    let lambda = config.loss.lambda(config.c_target);
    let mut value = 0.5 * t.low_rank_frobenius_sq();
    for (j, (x, cat)) in targets.examples().iter().enumerate() {
        for i in 0..m {
            let a = alphas[j * m + i];
            value += 0.5 * lambda * a * a;
            if a != 0.0 {
                let mut e = 1.0;
                if config.regularizer == RegularizerMode::IdentityPlus {
                    e -= constraint_label(*cat, i) * x.dot_dense(generators.plane(i))?;
                }
                value -= e * a;
            }
        }
    }
    Ok(value)
}

/// Primal objective ½‖W_lr‖² + C̃ Σ_{i,j} max(0, 1 − t_{ij} v_i·W x̃_j)^p
/// evaluated through the low-rank identities.
pub fn primal_objective(
    t: &LowRankTransform,
    targets: &Dataset,
    config: &SolverConfig,
) -> Result<f64> {
    let m = t.generator_count();
    let mut hinge = 0.0;
    for (x, cat) in targets.examples() {
        let products: Vec<f64> = t
            .betas
            .iter()
            .map(|b| x.dot_dense(b))
            .collect::<Result<_>>()?;
        for i in 0..m {
            let mut s: f64 = t.rho[i].iter().zip(&products).map(|(r, p)| r * p).sum();
            if t.mode == RegularizerMode::IdentityPlus {
                s += x.dot_dense(t.generators.plane(i))?;
            }
            let h = (1.0 - constraint_label(*cat, i) * s).max(0.0);
            hinge += h.powi(config.loss.exponent());
        }
    }
    Ok(0.5 * t.low_rank_frobenius_sq() + config.c_target * hinge)
}

/// Diagnostics from one transform solve.
#[derive(Debug, Clone)]
pub struct TransformDiagnostics {
    pub passes: usize,
    /// Projected-gradient gap observed on the last pass.
    pub pg_gap: f64,
    pub converged: bool,
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// Dual objective after each pass.
    pub dual_trace: Vec<f64>,
    /// Constraints excluded because their augmented feature has zero norm
    /// (zero target vector or zero generator).
    pub skipped_constraints: usize,
}

/// A solved transform together with its dual state (reusable as a warm
/// start for the next alternation) and diagnostics.
#[derive(Debug, Clone)]
pub struct TransformSolution {
    pub transform: LowRankTransform,
    pub state: DualState,
    pub diagnostics: TransformDiagnostics,
}

/// Solves for the transform from a cold start (α = 0).
pub fn solve_transform(
    targets: &Dataset,
    generators: &HyperplaneSet,
    config: &SolverConfig,
) -> Result<TransformSolution> {
    solve_transform_warm(targets, generators, config, None)
}

/// Solves for the transform, optionally warm-starting from dual variables
/// of a previous solve against the same targets. β rows are rebuilt from
/// the warm α; the Gram matrix and caches are recomputed for the new
/// generators.
pub fn solve_transform_warm(
    targets: &Dataset,
    generators: &HyperplaneSet,
    config: &SolverConfig,
    warm_alphas: Option<&[f64]>,
) -> Result<TransformSolution> {
    config.validate_dims(generators.dim(), targets.dimension())?;
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if targets.category_count() != generators.len() {
        return Err(Error::InvalidConfig(format!(
            "targets declare {} categories but {} generator hyperplanes were given",
            targets.category_count(),
            generators.len()
        )));
    }

    let m = generators.len();
    let nt = targets.len();
    let lambda = config.loss.lambda(config.c_target);
    let upper = config.loss.upper_bound(config.c_target);

    let rho = compute_rho(generators);
    let q: Vec<f64> = targets
        .examples()
        .iter()
        .map(|(x, _)| x.squared_norm())
        .collect();

    // constraint labels and, with the identity regularizer, the fixed
    // score offsets s0[l] = v_i · x̃_j
    let identity = config.regularizer == RegularizerMode::IdentityPlus;
    let mut labels = vec![0.0; m * nt];
    let mut s0 = vec![0.0; if identity { m * nt } else { 0 }];
    for (j, (x, cat)) in targets.examples().iter().enumerate() {
        for i in 0..m {
            labels[j * m + i] = constraint_label(*cat, i);
            if identity {
                s0[j * m + i] = x.dot_dense(generators.plane(i))?;
            }
        }
    }

    let mut alphas = match warm_alphas {
        Some(a) => {
            if a.len() != m * nt {
                return Err(Error::InvalidConfig(format!(
                    "warm start carries {} dual variables, expected {}",
                    a.len(),
                    m * nt
                )));
            }
            a.iter().map(|&v| v.clamp(0.0, upper)).collect()
        }
        None => vec![0.0; m * nt],
    };
    let mut betas = recompute_betas(&alphas, targets, m)?;

    // constraints over zero-norm augmented features can never move W
    let eligible: Vec<bool> = (0..m * nt)
        .map(|l| q[l / m] * rho[l % m][l % m] > 0.0)
        .collect();
    let skipped_constraints = eligible.iter().filter(|e| !**e).count();
    let mut active = eligible.clone();
    let mut active_count = m * nt - skipped_constraints;
    let total_eligible = active_count;

    let mut cache = vec![0.0; m];
    let mut cache_example = None;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut perm: Vec<usize> = (0..nt).collect();

    let dual_value = |betas: &[Vec<f64>], alphas: &[f64]| -> f64 {
        let mut value = 0.0;
        for i in 0..m {
            for ip in 0..m {
                let bb: f64 = betas[i].iter().zip(&betas[ip]).map(|(a, b)| a * b).sum();
                value += 0.5 * rho[i][ip] * bb;
            }
        }
        for (l, &a) in alphas.iter().enumerate() {
            value += 0.5 * lambda * a * a;
            if a != 0.0 {
                let e = if identity { 1.0 - labels[l] * s0[l] } else { 1.0 };
                value -= e * a;
            }
        }
        value
    };

    let mut pgmax_old = f64::INFINITY;
    let mut pgmin_old = f64::NEG_INFINITY;
    let mut dual_trace = Vec::new();
    let mut passes = 0;
    let mut pg_gap = 0.0;
    let mut converged = total_eligible == 0;

    while passes < config.max_passes && !converged {
        passes += 1;
        let mut pgmax_new = f64::NEG_INFINITY;
        let mut pgmin_new = f64::INFINITY;
        perm.shuffle(&mut rng);

        for &j in &perm {
            let block = j * m;
            if !active[block..block + m].iter().any(|a| *a) {
                continue;
            }
            // refresh the per-example products β_{i'}·x̃_j once per block
            let (x, _) = &targets.examples()[j];
            for (ip, slot) in cache.iter_mut().enumerate() {
                *slot = x.dot_dense(&betas[ip])?;
            }
            cache_example = Some(j);

            for i in 0..m {
                let l = block + i;
                if !active[l] {
                    continue;
                }
                let t = labels[l];
                let mut s: f64 = rho[i].iter().zip(&cache).map(|(r, p)| r * p).sum();
                if identity {
                    s += s0[l];
                }
                let g = t * s + lambda * alphas[l] - 1.0;

                let mut pg = 0.0;
                if alphas[l] == 0.0 {
                    if config.shrinking && g > pgmax_old {
                        active[l] = false;
                        active_count -= 1;
                        continue;
                    }
                    if g < 0.0 {
                        pg = g;
                    }
                } else if alphas[l] == upper {
                    if config.shrinking && g < pgmin_old {
                        active[l] = false;
                        active_count -= 1;
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
                    let old = alphas[l];
                    let next = (old - g / (q[j] * rho[i][i] + lambda)).clamp(0.0, upper);
                    alphas[l] = next;
                    let delta = next - old;
                    if delta != 0.0 {
                        x.add_scaled_to(delta * t, &mut betas[i]);
                        cache[i] += delta * t * q[j];
                    }
                }
            }
        }

        dual_trace.push(dual_value(&betas, &alphas));
        pg_gap = pgmax_new - pgmin_new;

        if pg_gap <= config.epsilon {
            if active_count == total_eligible {
                converged = true;
            } else {
                active.copy_from_slice(&eligible);
                active_count = total_eligible;
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

    let dual = dual_value(&betas, &alphas);
    let transform = LowRankTransform {
        generators: generators.clone(),
        betas,
        rho,
        mode: config.regularizer,
        target_dim: targets.dimension(),
    };
    let primal = primal_objective(&transform, targets, config)?;
    let state = DualState {
        alphas,
        q,
        lambda,
        upper,
        active,
        cache,
        cache_example,
    };
    Ok(TransformSolution {
        transform,
        state,
        diagnostics: TransformDiagnostics {
            passes,
            pg_gap,
            converged,
            dual_objective: dual,
            primal_objective: primal,
            dual_trace,
            skipped_constraints,
        },
    })
}
