//! Joint learning of the transform and one-vs-all classifiers.
//!
//! The joint problem
//!
//!   min ½‖W‖² + ½ Σ_k ‖θ_k‖² + C Σ_{i,k} (ξ_i^k)^p + C̃ Σ_{j,k} (η_j^k)^p
//!
//! with hinge constraints on source points θ_k·x_i and transformed target
//! points θ_k·W x̃_j is convex in each block, so it is solved by
//! alternating two steps: retrain the hyperplanes on source rows (cost C)
//! plus transformed target rows (cost C̃), then resolve the transform
//! against the current hyperplanes. Prediction scores target points
//! through the low-rank identity θ_k·W x̃ = Σ_{i'} (θ_k·v_{i'}) β_{i'}·x̃.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::svm::{self, TrainOptions};
use crate::transform::{self, TransformDiagnostics};
use crate::types::{
    Dataset, FeatureVector, HyperplaneSet, LowRankTransform, MmdtModel, SolverConfig,
};

/// What a fit step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStage {
    /// Source-only training when no alternations are requested.
    Initialization,
    Hyperplanes,
    Transform,
    FinalRefresh,
}

impl FitStage {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStage::Initialization => "init",
            FitStage::Hyperplanes => "hyperplanes",
            FitStage::Transform => "transform",
            FitStage::FinalRefresh => "refresh",
        }
    }
}

/// One logged step of the alternation.
#[derive(Debug, Clone)]
pub struct FitStep {
    /// Outer iteration, 1-based; 0 for initialization.
    pub iteration: usize,
    pub stage: FitStage,
    pub joint_objective: f64,
    pub elapsed: Duration,
}

/// Per-step log of a fit.
#[derive(Debug, Clone, Default)]
pub struct FitReport {
    pub steps: Vec<FitStep>,
    pub transform_diagnostics: Vec<TransformDiagnostics>,
}

fn align_to_vocabulary(data: &Dataset, vocabulary: &[String]) -> Result<Dataset> {
    let mut remap = Vec::with_capacity(data.category_count());
    for name in data.categories() {
        match vocabulary.iter().position(|c| c == name) {
            Some(id) => remap.push(id),
            None => return Err(Error::UnknownCategory(name.clone())),
        }
    }
    let examples = data
        .examples()
        .iter()
        .map(|(fv, cat)| (fv.clone(), remap[*cat]))
        .collect();
    Dataset::new(
        examples,
        data.dimension(),
        vocabulary.to_vec(),
        data.domain(),
    )
}

fn zero_generators(count: usize, dim: usize) -> HyperplaneSet {
    HyperplaneSet::new(vec![vec![0.0; dim]; count]).expect("zero planes are valid")
}

struct JointParts<'a> {
    transform: &'a LowRankTransform,
    classifiers: &'a HyperplaneSet,
    source: &'a Dataset,
    target: &'a Dataset,
}

fn joint_objective_prepared(parts: &JointParts, config: &SolverConfig) -> Result<f64> {
    let k = parts.classifiers.len();
    let p = config.loss.exponent();
    let mut value = 0.5 * parts.transform.low_rank_frobenius_sq();
    for plane in parts.classifiers.planes() {
        value += 0.5 * plane.iter().map(|v| v * v).sum::<f64>();
    }
    for (x, cat) in parts.source.examples() {
        for ki in 0..k {
            let score = x.dot_dense(parts.classifiers.plane(ki))?;
            let h = (1.0 - transform::constraint_label(*cat, ki) * score).max(0.0);
            value += config.c_source * h.powi(p);
        }
    }
    let mapped: Vec<Vec<f64>> = parts
        .classifiers
        .planes()
        .iter()
        .map(|theta| parts.transform.map_hyperplane(theta))
        .collect::<Result<_>>()?;
    for (x, cat) in parts.target.examples() {
        for ki in 0..k {
            let score = x.dot_dense(&mapped[ki])?;
            let h = (1.0 - transform::constraint_label(*cat, ki) * score).max(0.0);
            value += config.c_target * h.powi(p);
        }
    }
    Ok(value)
}

/// Full joint objective of a model on raw datasets. Bias augmentation and
/// vocabulary alignment are applied to match the model.
pub fn joint_objective(
    model: &MmdtModel,
    source: &Dataset,
    target: &Dataset,
    config: &SolverConfig,
) -> Result<f64> {
    let source = align_to_vocabulary(source, model.categories())?;
    let target = align_to_vocabulary(target, model.categories())?;
    let (source, target) = if model.augment_bias() {
        (source.with_bias_feature(), target.with_bias_feature())
    } else {
        (source, target)
    };
    joint_objective_prepared(
        &JointParts {
            transform: model.transform(),
            classifiers: model.classifiers(),
            source: &source,
            target: &target,
        },
        config,
    )
}

/// Fits a model by block-coordinate descent.
///
/// Each of `config.outer_iterations` alternations retrains the one-vs-all
/// hyperplanes on source rows plus currently-transformed target rows, then
/// resolves the transform against those hyperplanes, warm-starting from
/// the previous dual variables. The transform starts at the identity with
/// the identity regularizer and at zero otherwise; with zero alternations
/// the model is a source-only classifier with the untouched start
/// transform.
pub fn fit(source: &Dataset, target: &Dataset, config: &SolverConfig) -> Result<(MmdtModel, FitReport)> {
    config.validate_dims(source.dimension(), target.dimension())?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if source.category_count() < 2 {
        return Err(Error::TooFewCategories(source.category_count()));
    }
    if source.category_count() != target.category_count() {
        return Err(Error::InvalidConfig(format!(
            "source declares {} categories, target {}",
            source.category_count(),
            target.category_count()
        )));
    }

    let target = align_to_vocabulary(target, source.categories())?;
    let categories = source.categories().to_vec();
    let (src, tgt) = if config.augment_bias {
        (source.with_bias_feature(), target.with_bias_feature())
    } else {
        (source.clone(), target)
    };
    let k = src.category_count();
    let dim = src.dimension();

    let svm_opts = |seed_offset: u64| TrainOptions {
        loss: config.loss,
        epsilon: config.epsilon,
        max_passes: config.max_passes,
        seed: config.rng_seed.wrapping_add(seed_offset),
        shrinking: config.shrinking,
    };

    let mut report = FitReport::default();
    let mut transform = LowRankTransform::trivial(
        zero_generators(k, dim),
        config.regularizer,
        tgt.dimension(),
    )?;

    if config.outer_iterations == 0 {
        let started = Instant::now();
        let classifiers = svm::train_one_vs_all(&src, config.c_source, &svm_opts(0))?;
        let objective = joint_objective_prepared(
            &JointParts {
                transform: &transform,
                classifiers: &classifiers,
                source: &src,
                target: &tgt,
            },
            config,
        )?;
        report.steps.push(FitStep {
            iteration: 0,
            stage: FitStage::Initialization,
            joint_objective: objective,
            elapsed: started.elapsed(),
        });
        let model = MmdtModel::new(transform, classifiers, categories, config.augment_bias)?;
        return Ok((model, report));
    }

    let src_labels: Vec<usize> = src.examples().iter().map(|(_, c)| *c).collect();
    let tgt_labels: Vec<usize> = tgt.examples().iter().map(|(_, c)| *c).collect();
    let mut costs = vec![config.c_source; src.len()];
    costs.extend(std::iter::repeat(config.c_target).take(tgt.len()));
    let mut labels = src_labels;
    labels.extend(tgt_labels);

    let mut classifiers = None;
    let mut warm: Option<Vec<f64>> = None;

    for it in 1..=config.outer_iterations {
        // (a) hyperplanes on source plus transformed target rows
        let started = Instant::now();
        let mut features: Vec<FeatureVector> =
            src.examples().iter().map(|(f, _)| f.clone()).collect();
        for (x, _) in tgt.examples() {
            features.push(FeatureVector::Dense(transform.apply_to_target(x)?));
        }
        let theta = svm::train_one_vs_all_weighted(
            &features,
            &labels,
            k,
            &costs,
            dim,
            &svm_opts(it as u64),
        )?;
        let objective = joint_objective_prepared(
            &JointParts {
                transform: &transform,
                classifiers: &theta,
                source: &src,
                target: &tgt,
            },
            config,
        )?;
        report.steps.push(FitStep {
            iteration: it,
            stage: FitStage::Hyperplanes,
            joint_objective: objective,
            elapsed: started.elapsed(),
        });

        // (b) transform against the current hyperplanes
        let started = Instant::now();
        let mut solve_config = config.clone();
        solve_config.rng_seed = config.rng_seed.wrapping_add(it as u64);
        let solution =
            transform::solve_transform_warm(&tgt, &theta, &solve_config, warm.as_deref())?;
        transform = solution.transform;
        warm = Some(solution.state.alphas().to_vec());
        report.transform_diagnostics.push(solution.diagnostics);
        let objective = joint_objective_prepared(
            &JointParts {
                transform: &transform,
                classifiers: &theta,
                source: &src,
                target: &tgt,
            },
            config,
        )?;
        report.steps.push(FitStep {
            iteration: it,
            stage: FitStage::Transform,
            joint_objective: objective,
            elapsed: started.elapsed(),
        });

        classifiers = Some(theta);
    }

    let mut classifiers = classifiers.expect("at least one alternation ran");

    if config.final_refresh {
        let started = Instant::now();
        let mut features: Vec<FeatureVector> =
            src.examples().iter().map(|(f, _)| f.clone()).collect();
        for (x, _) in tgt.examples() {
            features.push(FeatureVector::Dense(transform.apply_to_target(x)?));
        }
        classifiers = svm::train_one_vs_all_weighted(
            &features,
            &labels,
            k,
            &costs,
            dim,
            &svm_opts(config.outer_iterations as u64 + 1),
        )?;
        let objective = joint_objective_prepared(
            &JointParts {
                transform: &transform,
                classifiers: &classifiers,
                source: &src,
                target: &tgt,
            },
            config,
        )?;
        report.steps.push(FitStep {
            iteration: config.outer_iterations,
            stage: FitStage::FinalRefresh,
            joint_objective: objective,
            elapsed: started.elapsed(),
        });
    }

    let model = MmdtModel::new(transform, classifiers, categories, config.augment_bias)?;
    Ok((model, report))
}

/// Scores target-space inputs against a model through mapped hyperplanes.
///
/// Building a predictor maps every classifier into the target space once;
/// each prediction is then K dense dot products.
pub struct Predictor<'a> {
    model: &'a MmdtModel,
    mapped: Vec<Vec<f64>>,
}

impl MmdtModel {
    pub fn predictor(&self) -> Result<Predictor<'_>> {
        let mapped = self
            .classifiers
            .planes()
            .iter()
            .map(|theta| self.transform.map_hyperplane(theta))
            .collect::<Result<_>>()?;
        Ok(Predictor {
            model: self,
            mapped,
        })
    }

    /// One-off prediction; use [`MmdtModel::predictor`] for batches.
    pub fn predict(&self, x: &FeatureVector) -> Result<(usize, Vec<f64>)> {
        self.predictor()?.predict(x)
    }
}

impl Predictor<'_> {
    fn prepare(&self, x: &FeatureVector) -> Result<FeatureVector> {
        let expected = self.model.target_input_dim();
        if x.dim() > expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: x.dim(),
            });
        }
        if self.model.augment_bias() {
            let padded = if x.dim() < expected {
                match x.clone() {
                    FeatureVector::Dense(mut v) => {
                        v.resize(expected, 0.0);
                        FeatureVector::Dense(v)
                    }
                    FeatureVector::Sparse {
                        indices, values, ..
                    } => FeatureVector::Sparse {
                        dim: expected,
                        indices,
                        values,
                    },
                }
            } else {
                x.clone()
            };
            Ok(padded.with_appended(1.0))
        } else {
            Ok(x.clone())
        }
    }

    /// Scores θ_k·W x̃ for every category.
    pub fn scores(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        let prepared = self.prepare(x)?;
        self.mapped
            .iter()
            .map(|plane| prepared.dot_dense(plane))
            .collect()
    }

    /// Highest-scoring category; ties go to the smallest id.
    pub fn predict(&self, x: &FeatureVector) -> Result<(usize, Vec<f64>)> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        Ok((best, scores))
    }
}

/// Adds a classifier for a category that has source examples only.
///
/// The new hyperplane trains one-vs-all on source data (new class
/// positive, every example of `negatives` negative) and is attached to
/// the model's existing transform, which is left bit-identical: the
/// learned mapping is category-invariant, so the new class rides on it.
pub fn transfer_new_category(
    model: &MmdtModel,
    category: &str,
    examples: &[FeatureVector],
    negatives: &Dataset,
    cost: f64,
    opts: &TrainOptions,
) -> Result<MmdtModel> {
    if model.categories().iter().any(|c| c == category) {
        return Err(Error::DuplicateCategory(category.to_string()));
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let raw_dim = model.source_input_dim();
    for x in examples {
        if x.dim() > raw_dim {
            return Err(Error::DimensionMismatch {
                expected: raw_dim,
                got: x.dim(),
            });
        }
    }
    if negatives.dimension() != raw_dim {
        return Err(Error::DimensionMismatch {
            expected: raw_dim,
            got: negatives.dimension(),
        });
    }

    let prepare = |x: &FeatureVector| -> FeatureVector {
        if model.augment_bias() {
            let mut padded = x.clone();
            if x.dim() < raw_dim {
                padded = match padded {
                    FeatureVector::Dense(mut v) => {
                        v.resize(raw_dim, 0.0);
                        FeatureVector::Dense(v)
                    }
                    FeatureVector::Sparse {
                        indices, values, ..
                    } => FeatureVector::Sparse {
                        dim: raw_dim,
                        indices,
                        values,
                    },
                };
            }
            padded.with_appended(1.0)
        } else {
            x.clone()
        }
    };

    let mut features: Vec<FeatureVector> = examples.iter().map(prepare).collect();
    let mut signs = vec![1.0; features.len()];
    for (x, _) in negatives.examples() {
        features.push(prepare(x));
        signs.push(-1.0);
    }
    let sol = svm::train_binary(&features, &signs, cost, opts)?;
    let mut plane = sol.weights;
    plane.resize(model.transform().source_dim(), 0.0);

    let mut planes = model.classifiers().planes().to_vec();
    planes.push(plane);
    let mut categories = model.categories().to_vec();
    categories.push(category.to_string());
    MmdtModel::new(
        model.transform().clone(),
        HyperplaneSet::new(planes)?,
        categories,
        model.augment_bias(),
    )
}

/// Per-class tally from an evaluation run.
#[derive(Debug, Clone)]
pub struct ClassAccuracy {
    pub name: String,
    pub correct: usize,
    pub total: usize,
}

impl ClassAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Accuracy of a model over a labeled dataset.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<ClassAccuracy>,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Evaluates a model on labeled target-domain data. Dataset labels map to
/// model categories by name; an unknown label is an error.
pub fn evaluate(model: &MmdtModel, data: &Dataset) -> Result<Evaluation> {
    let mut remap = Vec::with_capacity(data.category_count());
    for name in data.categories() {
        match model.categories().iter().position(|c| c == name) {
            Some(id) => remap.push(id),
            None => return Err(Error::UnknownCategory(name.clone())),
        }
    }
    let predictor = model.predictor()?;
    let mut per_class: Vec<ClassAccuracy> = model
        .categories()
        .iter()
        .map(|name| ClassAccuracy {
            name: name.clone(),
            correct: 0,
            total: 0,
        })
        .collect();
    let mut correct = 0;
    for (x, cat) in data.examples() {
        let truth = remap[*cat];
        let (predicted, _) = predictor.predict(x)?;
        per_class[truth].total += 1;
        if predicted == truth {
            per_class[truth].correct += 1;
            correct += 1;
        }
    }
    Ok(Evaluation {
        correct,
        total: data.len(),
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{DomainTag, Loss, RegularizerMode};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::dense(values.to_vec()).unwrap()
    }

    fn two_cluster_dataset(
        seed: u64,
        per_class: usize,
        dim: usize,
        domain: DomainTag,
    ) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut examples = Vec::new();
        for cat in 0..2usize {
            let center = if cat == 0 { 2.0 } else { -2.0 };
            for _ in 0..per_class {
                let mut v = vec![0.0; dim];
                v[0] = center + rng.gen_range(-0.5..0.5);
                for x in v.iter_mut().skip(1) {
                    *x = rng.gen_range(-0.5..0.5);
                }
                examples.push((fv(&v), cat));
            }
        }
        Dataset::new(
            examples,
            dim,
            vec!["pos".into(), "neg".into()],
            domain,
        )
        .unwrap()
    }

    fn quick_config() -> SolverConfig {
        SolverConfig {
            epsilon: 1e-6,
            max_passes: 20_000,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_iterations_equals_source_only_svm() {
        let source = two_cluster_dataset(1, 8, 3, DomainTag::Source);
        let target = two_cluster_dataset(2, 4, 3, DomainTag::Target);
        let config = SolverConfig {
            outer_iterations: 0,
            ..quick_config()
        };
        let (model, report) = fit(&source, &target, &config).unwrap();
        assert_eq!(report.steps.len(), 1);
        assert_eq!(report.steps[0].stage, FitStage::Initialization);

        let opts = TrainOptions {
            loss: config.loss,
            epsilon: config.epsilon,
            max_passes: config.max_passes,
            seed: config.rng_seed,
            shrinking: config.shrinking,
        };
        let direct =
            svm::train_one_vs_all(&source.with_bias_feature(), config.c_source, &opts).unwrap();
        assert_eq!(model.classifiers(), &direct);
        // the start transform is untouched: all-zero betas
        assert!(model
            .transform()
            .betas()
            .iter()
            .all(|b| b.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn joint_objective_of_all_zero_model() {
        let source = two_cluster_dataset(3, 5, 2, DomainTag::Source);
        let target = two_cluster_dataset(4, 3, 2, DomainTag::Target);
        let k = 2;
        let dim = 3; // augmented
        let transform = LowRankTransform::trivial(
            zero_generators(k, dim),
            RegularizerMode::Pure,
            dim,
        )
        .unwrap();
        let classifiers = zero_generators(k, dim);
        let model = MmdtModel::new(
            transform,
            classifiers,
            vec!["pos".into(), "neg".into()],
            true,
        )
        .unwrap();
        let config = SolverConfig {
            c_source: 2.0,
            c_target: 0.5,
            ..quick_config()
        };
        let j = joint_objective(&model, &source, &target, &config).unwrap();
        let expected = 2.0 * (source.len() * k) as f64 + 0.5 * (target.len() * k) as f64;
        assert!((j - expected).abs() < 1e-12, "{j} vs {expected}");
    }

    #[test]
    fn joint_objective_decomposes() {
        let source = two_cluster_dataset(5, 6, 3, DomainTag::Source);
        let target = two_cluster_dataset(6, 4, 3, DomainTag::Target);
        let config = quick_config();
        let (model, _) = fit(&source, &target, &config).unwrap();

        let joint = joint_objective(&model, &source, &target, &config).unwrap();

        // decompose: transform primal (against its own generators) plus
        // classifier regularizer and source hinges
        let tgt_aligned = align_to_vocabulary(&target, model.categories()).unwrap();
        let tgt = tgt_aligned.with_bias_feature();
        let src = source.with_bias_feature();

        let transform_part =
            transform::primal_objective(model.transform(), &tgt, &config).unwrap()
                - 0.5 * model.transform().low_rank_frobenius_sq();
        // transform_part now holds only the target hinge sum
        let mut rest = 0.5 * model.transform().low_rank_frobenius_sq();
        for plane in model.classifiers().planes() {
            rest += 0.5 * plane.iter().map(|v| v * v).sum::<f64>();
        }
        for (x, cat) in src.examples() {
            for ki in 0..model.category_count() {
                let s = x.dot_dense(model.classifiers().plane(ki)).unwrap();
                let h = (1.0 - transform::constraint_label(*cat, ki) * s).max(0.0);
                rest += config.c_source * h.powi(2);
            }
        }
        // generators of the final transform are exactly the classifiers, so
        // the two routes agree
        assert_eq!(model.transform().generators(), model.classifiers());
        assert!(
            (joint - (rest + transform_part)).abs() <= 1e-9 * (1.0 + joint),
            "{joint} vs {}",
            rest + transform_part
        );
    }

    #[test]
    fn fit_objective_trace_non_increasing() {
        let source = two_cluster_dataset(7, 10, 3, DomainTag::Source);
        let target = two_cluster_dataset(8, 5, 3, DomainTag::Target);
        for mode in [RegularizerMode::Pure, RegularizerMode::IdentityPlus] {
            let config = SolverConfig {
                regularizer: mode,
                outer_iterations: 3,
                final_refresh: true,
                ..quick_config()
            };
            let (_, report) = fit(&source, &target, &config).unwrap();
            let objectives: Vec<f64> = report.steps.iter().map(|s| s.joint_objective).collect();
            for pair in objectives.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-8 * (1.0 + pair[0].abs()),
                    "objective increased: {:?}",
                    objectives
                );
            }
        }
    }

    #[test]
    fn predict_scores_are_odd_for_opposed_planes() {
        let gens = HyperplaneSet::new(vec![vec![1.0, 0.5], vec![-0.5, 1.0]]).unwrap();
        let transform = LowRankTransform::new(
            gens,
            vec![vec![0.3, -0.2], vec![0.1, 0.4]],
            RegularizerMode::Pure,
            2,
        )
        .unwrap();
        let theta = vec![0.7, -0.3];
        let classifiers =
            HyperplaneSet::new(vec![theta.clone(), theta.iter().map(|v| -v).collect()]).unwrap();
        let model = MmdtModel::new(
            transform,
            classifiers,
            vec!["a".into(), "b".into()],
            false,
        )
        .unwrap();
        let x = fv(&[0.9, -1.4]);
        let neg = fv(&[-0.9, 1.4]);
        let (kx, sx) = model.predict(&x).unwrap();
        let (kn, sn) = model.predict(&neg).unwrap();
        assert!((sx[0] + sn[0]).abs() < 1e-12);
        assert!((sx[1] + sn[1]).abs() < 1e-12);
        if sx[0] != sx[1] {
            assert_ne!(kx, kn);
        }
    }

    #[test]
    fn predictor_scores_match_apply_route() {
        let source = two_cluster_dataset(9, 6, 3, DomainTag::Source);
        let target = two_cluster_dataset(10, 4, 3, DomainTag::Target);
        let (model, _) = fit(&source, &target, &quick_config()).unwrap();
        let predictor = model.predictor().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = fv(&[
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ]);
            let scores = predictor.scores(&x).unwrap();
            let augmented = x.with_appended(1.0);
            let wx = model.transform().apply_to_target(&augmented).unwrap();
            for (ki, &s) in scores.iter().enumerate() {
                let direct: f64 = model
                    .classifiers()
                    .plane(ki)
                    .iter()
                    .zip(&wx)
                    .map(|(a, b)| a * b)
                    .sum();
                assert!((s - direct).abs() < 1e-9, "{s} vs {direct}");
            }
        }
    }

    #[test]
    fn transfer_rejects_duplicates_and_keeps_transform() {
        let source = two_cluster_dataset(12, 6, 3, DomainTag::Source);
        let target = two_cluster_dataset(13, 4, 3, DomainTag::Target);
        let (model, _) = fit(&source, &target, &quick_config()).unwrap();
        let err = transfer_new_category(
            &model,
            "pos",
            &[fv(&[1.0, 0.0, 0.0])],
            &source,
            1.0,
            &TrainOptions::default(),
        );
        assert!(matches!(err, Err(Error::DuplicateCategory(_))));

        let before = model.transform().betas().to_vec();
        let extended = transfer_new_category(
            &model,
            "extra",
            &[fv(&[0.0, 3.0, 0.0]), fv(&[0.0, 2.5, 0.2])],
            &source,
            1.0,
            &TrainOptions::default(),
        )
        .unwrap();
        assert_eq!(extended.category_count(), 3);
        assert_eq!(extended.classifiers().len(), 3);
        // transform is bit-identical
        assert_eq!(extended.transform().betas(), &before[..]);
        assert_eq!(
            extended.transform().generators(),
            model.transform().generators()
        );
    }

    #[test]
    fn mismatched_category_counts_rejected() {
        let source = two_cluster_dataset(14, 4, 2, DomainTag::Source);
        let target = Dataset::new(
            vec![(fv(&[1.0, 0.0]), 0)],
            2,
            vec!["pos".into()],
            DomainTag::Target,
        )
        .unwrap();
        assert!(fit(&source, &target, &quick_config()).is_err());
    }

    #[test]
    fn fit_rejects_identity_mode_across_dims() {
        let source = two_cluster_dataset(15, 4, 3, DomainTag::Source);
        let target = two_cluster_dataset(16, 4, 2, DomainTag::Target);
        let config = SolverConfig {
            regularizer: RegularizerMode::IdentityPlus,
            ..quick_config()
        };
        let err = fit(&source, &target, &config);
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn evaluate_counts_per_class() {
        let source = two_cluster_dataset(17, 8, 3, DomainTag::Source);
        let target = two_cluster_dataset(18, 6, 3, DomainTag::Target);
        let (model, _) = fit(&source, &target, &quick_config()).unwrap();
        let eval = evaluate(&model, &target).unwrap();
        assert_eq!(eval.total, target.len());
        let sum: usize = eval.per_class.iter().map(|c| c.correct).sum();
        assert_eq!(sum, eval.correct);
        // identical distributions, easy separation: near-perfect accuracy
        assert!(eval.accuracy() > 0.9, "accuracy {}", eval.accuracy());
    }

    #[test]
    fn l1_loss_fit_runs() {
        let source = two_cluster_dataset(19, 6, 2, DomainTag::Source);
        let target = two_cluster_dataset(20, 4, 2, DomainTag::Target);
        let config = SolverConfig {
            loss: Loss::L1,
            ..quick_config()
        };
        let (model, _) = fit(&source, &target, &config).unwrap();
        assert!(evaluate(&model, &target).unwrap().accuracy() > 0.8);
    }
}
