//! Domain types shared by the solvers: feature vectors, datasets,
//! hyperplane sets, the implicit low-rank transform, and solver state.

use crate::error::{Error, Result};

/// A feature vector, either dense or sparse.
///
/// Sparse vectors keep strictly increasing indices below their declared
/// dimension. All stored values are finite; the constructors reject
/// anything else.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVector {
    Dense(Vec<f64>),
    Sparse {
        dim: usize,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

impl FeatureVector {
    /// Builds a dense vector, rejecting non-finite entries.
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(Some("dense feature vector".into())));
        }
        Ok(FeatureVector::Dense(values))
    }

    /// Builds a sparse vector from (index, value) pairs.
    ///
    /// Indices must be strictly increasing and below `dim`.
    pub fn sparse(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (idx, val) in entries {
            if let Some(&last) = indices.last() {
                if idx <= last {
                    return Err(Error::InvalidConfig(format!(
                        "sparse indices must be strictly increasing, got {idx} after {last}"
                    )));
                }
            }
            if idx >= dim {
                return Err(Error::InvalidConfig(format!(
                    "sparse index {idx} out of range for dimension {dim}"
                )));
            }
            if !val.is_finite() {
                return Err(Error::NonFinite(Some(format!("sparse entry {idx}"))));
            }
            indices.push(idx);
            values.push(val);
        }
        Ok(FeatureVector::Sparse {
            dim,
            indices,
            values,
        })
    }

    /// Declared dimension (dense length, or the sparse `dim`).
    pub fn dim(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Sparse { dim, .. } => *dim,
        }
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        match self {
            FeatureVector::Dense(v) => v.len(),
            FeatureVector::Sparse { values, .. } => values.len(),
        }
    }

    /// Iterates over (index, value) pairs of stored entries.
    pub fn iter_entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            FeatureVector::Dense(v) => Box::new(v.iter().copied().enumerate()),
            FeatureVector::Sparse {
                indices, values, ..
            } => Box::new(indices.iter().copied().zip(values.iter().copied())),
        }
    }

    /// Dot product with another feature vector.
    ///
    /// Vectors embed into the larger of the two spaces; a sparse index
    /// past the other operand's dimension is a dimension mismatch.
    pub fn dot(&self, other: &FeatureVector) -> Result<f64> {
        match (self, other) {
            (FeatureVector::Dense(a), FeatureVector::Dense(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        got: b.len(),
                    });
                }
                Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
            }
            (FeatureVector::Dense(d), s @ FeatureVector::Sparse { .. })
            | (s @ FeatureVector::Sparse { .. }, FeatureVector::Dense(d)) => s.dot_dense(d),
            (
                FeatureVector::Sparse {
                    indices: ia,
                    values: va,
                    ..
                },
                FeatureVector::Sparse {
                    indices: ib,
                    values: vb,
                    ..
                },
            ) => {
                let mut sum = 0.0;
                let (mut i, mut j) = (0, 0);
                while i < ia.len() && j < ib.len() {
                    match ia[i].cmp(&ib[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            sum += va[i] * vb[j];
                            i += 1;
                            j += 1;
                        }
                    }
                }
                Ok(sum)
            }
        }
    }

    /// Dot product with a dense slice. The slice may be longer than this
    /// vector; missing coordinates are treated as zero.
    pub fn dot_dense(&self, w: &[f64]) -> Result<f64> {
        match self {
            FeatureVector::Dense(v) => {
                if v.len() > w.len() {
                    return Err(Error::DimensionMismatch {
                        expected: w.len(),
                        got: v.len(),
                    });
                }
                Ok(v.iter().zip(w).map(|(x, y)| x * y).sum())
            }
            FeatureVector::Sparse {
                indices, values, ..
            } => {
                if let Some(&last) = indices.last() {
                    if last >= w.len() {
                        return Err(Error::DimensionMismatch {
                            expected: w.len(),
                            got: last + 1,
                        });
                    }
                }
                Ok(indices
                    .iter()
                    .zip(values)
                    .map(|(&i, &v)| v * w[i])
                    .sum())
            }
        }
    }

    /// Sum of squared entries.
    pub fn squared_norm(&self) -> f64 {
        match self {
            FeatureVector::Dense(v) => v.iter().map(|x| x * x).sum(),
            FeatureVector::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
        }
    }

    /// Adds `scale * self` into a dense accumulator.
    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        match self {
            FeatureVector::Dense(v) => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += scale * x;
                }
            }
            FeatureVector::Sparse {
                indices, values, ..
            } => {
                for (&i, &v) in indices.iter().zip(values) {
                    out[i] += scale * v;
                }
            }
        }
    }

    /// Dense copy padded with zeros up to `dim`.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter_entries() {
            out[i] = v;
        }
        out
    }

    /// Returns a copy with one extra trailing coordinate set to `value`.
    /// Used for bias augmentation.
    pub fn with_appended(&self, value: f64) -> FeatureVector {
        match self {
            FeatureVector::Dense(v) => {
                let mut v = v.clone();
                v.push(value);
                FeatureVector::Dense(v)
            }
            FeatureVector::Sparse {
                dim,
                indices,
                values,
            } => {
                let mut indices = indices.clone();
                let mut values = values.clone();
                indices.push(*dim);
                values.push(value);
                FeatureVector::Sparse {
                    dim: dim + 1,
                    indices,
                    values,
                }
            }
        }
    }
}

/// Which side of the adaptation problem a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    Source,
    Target,
}

/// Labeled feature vectors for one domain.
#[derive(Debug, Clone)]
pub struct Dataset {
    examples: Vec<(FeatureVector, usize)>,
    dimension: usize,
    categories: Vec<String>,
    domain: DomainTag,
}

impl Dataset {
    /// Validates and builds a dataset. Every example must fit inside
    /// `dimension` and carry a category id below the vocabulary size.
    pub fn new(
        examples: Vec<(FeatureVector, usize)>,
        dimension: usize,
        categories: Vec<String>,
        domain: DomainTag,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if categories.is_empty() {
            return Err(Error::TooFewCategories(0));
        }
        for (i, name) in categories.iter().enumerate() {
            if categories[..i].contains(name) {
                return Err(Error::DuplicateCategory(name.clone()));
            }
        }
        for (fv, cat) in &examples {
            if fv.dim() > dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: fv.dim(),
                });
            }
            if *cat >= categories.len() {
                return Err(Error::InvalidConfig(format!(
                    "category id {cat} out of range for {} categories",
                    categories.len()
                )));
            }
        }
        Ok(Dataset {
            examples,
            dimension,
            categories,
            domain,
        })
    }

    pub fn examples(&self) -> &[(FeatureVector, usize)] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of categories K in the vocabulary.
    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn category_id(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    /// Copy with a constant-1 feature appended to every example
    /// (dimension grows by one). Hyperplanes trained on the result learn
    /// their bias through the extra coordinate.
    pub fn with_bias_feature(&self) -> Dataset {
        let examples = self
            .examples
            .iter()
            .map(|(fv, cat)| {
                let mut padded = fv.clone();
                // pad sparse vectors up to the dataset dimension first so
                // the bias lands on the same coordinate for every example
                if fv.dim() < self.dimension {
                    padded = match padded {
                        FeatureVector::Dense(mut v) => {
                            v.resize(self.dimension, 0.0);
                            FeatureVector::Dense(v)
                        }
                        FeatureVector::Sparse {
                            indices, values, ..
                        } => FeatureVector::Sparse {
                            dim: self.dimension,
                            indices,
                            values,
                        },
                    };
                }
                (padded.with_appended(1.0), *cat)
            })
            .collect();
        Dataset {
            examples,
            dimension: self.dimension + 1,
            categories: self.categories.clone(),
            domain: self.domain,
        }
    }

    /// Merges another dataset of the same domain and dimension into this
    /// one, unioning vocabularies by category name.
    pub fn merged_with(&self, other: &Dataset) -> Result<Dataset> {
        if other.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let mut categories = self.categories.clone();
        let mut remap = Vec::with_capacity(other.categories.len());
        for name in &other.categories {
            match categories.iter().position(|c| c == name) {
                Some(id) => remap.push(id),
                None => {
                    categories.push(name.clone());
                    remap.push(categories.len() - 1);
                }
            }
        }
        let mut examples = self.examples.clone();
        examples.extend(
            other
                .examples
                .iter()
                .map(|(fv, cat)| (fv.clone(), remap[*cat])),
        );
        Ok(Dataset {
            examples,
            dimension: self.dimension,
            categories,
            domain: self.domain,
        })
    }
}

/// A set of linear classifiers sharing one feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneSet {
    planes: Vec<Vec<f64>>,
    dim: usize,
}

impl HyperplaneSet {
    pub fn new(planes: Vec<Vec<f64>>) -> Result<Self> {
        let dim = planes.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "hyperplane set needs at least one non-empty plane".into(),
            ));
        }
        for p in &planes {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(Some("hyperplane".into())));
            }
        }
        Ok(HyperplaneSet { planes, dim })
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn plane(&self, i: usize) -> &[f64] {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[Vec<f64>] {
        &self.planes
    }
}

/// Hinge loss exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// p = 1, box-constrained dual.
    L1,
    /// p = 2, squared hinge with a diagonal dual regularizer.
    L2,
}

impl Loss {
    /// Diagonal dual term for a constraint with cost `c`.
    pub fn lambda(&self, c: f64) -> f64 {
        match self {
            Loss::L1 => 0.0,
            Loss::L2 => 1.0 / (2.0 * c),
        }
    }

    /// Upper bound on a dual variable with cost `c`.
    pub fn upper_bound(&self, c: f64) -> f64 {
        match self {
            Loss::L1 => c,
            Loss::L2 => f64::INFINITY,
        }
    }

    pub fn exponent(&self) -> i32 {
        match self {
            Loss::L1 => 1,
            Loss::L2 => 2,
        }
    }
}

/// Regularizer on the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerMode {
    /// ½‖W‖²; W is a pure sum of dyadic products, rank ≤ m.
    Pure,
    /// ½‖W − I‖²; W = I + low-rank, requires equal dimensions.
    IdentityPlus,
}

/// Solver and driver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Cost C on source hinge terms.
    pub c_source: f64,
    /// Cost C̃ on target (transform) hinge terms.
    pub c_target: f64,
    pub loss: Loss,
    /// Stopping tolerance on the projected-gradient gap.
    pub epsilon: f64,
    /// Pass limit for each inner solve.
    pub max_passes: usize,
    pub regularizer: RegularizerMode,
    /// Number of hyperplane/transform alternations.
    pub outer_iterations: usize,
    pub rng_seed: u64,
    /// Append a constant-1 feature to both domains before training.
    pub augment_bias: bool,
    /// Retrain hyperplanes once more after the last transform solve.
    pub final_refresh: bool,
    /// Shrink dual variables pinned at their bounds. Disable for timing runs.
    pub shrinking: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c_source: 1.0,
            c_target: 1.0,
            loss: Loss::L2,
            epsilon: 0.1,
            max_passes: 1000,
            regularizer: RegularizerMode::Pure,
            outer_iterations: 2,
            rng_seed: 0,
            augment_bias: true,
            final_refresh: false,
            shrinking: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_source > 0.0) || !self.c_source.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "source cost must be positive and finite, got {}",
                self.c_source
            )));
        }
        if !(self.c_target > 0.0) || !self.c_target.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "target cost must be positive and finite, got {}",
                self.c_target
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidConfig("max_passes must be positive".into()));
        }
        Ok(())
    }

    /// Rejects identity-regularized configurations across unequal dimensions.
    pub fn validate_dims(&self, source_dim: usize, target_dim: usize) -> Result<()> {
        self.validate()?;
        if self.regularizer == RegularizerMode::IdentityPlus && source_dim != target_dim {
            return Err(Error::InvalidConfig(format!(
                "identity regularizer requires equal dimensions, got source {source_dim} and target {target_dim}"
            )));
        }
        Ok(())
    }
}

/// The transform W held implicitly: generator hyperplanes V, coefficient
/// rows B (one β per generator), and the generator Gram matrix R.
#[derive(Debug, Clone)]
pub struct LowRankTransform {
    pub(crate) generators: HyperplaneSet,
    pub(crate) betas: Vec<Vec<f64>>,
    pub(crate) rho: Vec<Vec<f64>>,
    pub(crate) mode: RegularizerMode,
    pub(crate) target_dim: usize,
}

impl LowRankTransform {
    /// Number of generator hyperplanes m.
    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &HyperplaneSet {
        &self.generators
    }

    pub fn betas(&self) -> &[Vec<f64>] {
        &self.betas
    }

    /// Generator Gram matrix R, with R[i][i'] = V[i]·V[i'].
    pub fn rho(&self) -> &[Vec<f64>] {
        &self.rho
    }

    pub fn mode(&self) -> RegularizerMode {
        self.mode
    }

    pub fn source_dim(&self) -> usize {
        self.generators.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }
}

/// Dual variables and cached quantities for one transform solve.
///
/// Mutable only inside a single solver run; carried across runs to warm
/// start the next alternation.
#[derive(Debug, Clone)]
pub struct DualState {
    pub(crate) alphas: Vec<f64>,
    pub(crate) q: Vec<f64>,
    pub(crate) lambda: f64,
    pub(crate) upper: f64,
    pub(crate) active: Vec<bool>,
    /// Cached β_{i'}·x̃_j for the example the solver is currently visiting.
    pub(crate) cache: Vec<f64>,
    pub(crate) cache_example: Option<usize>,
}

impl DualState {
    /// Builds a state snapshot at explicit dual variables, with cached
    /// norms recomputed from the targets. The constraint count must be a
    /// multiple of the target count; the quotient is the hyperplane count.
    pub fn from_parts(
        alphas: Vec<f64>,
        targets: &Dataset,
        loss: Loss,
        c_target: f64,
    ) -> Result<Self> {
        if targets.is_empty() || alphas.len() % targets.len() != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} dual variables do not divide into {} examples",
                alphas.len(),
                targets.len()
            )));
        }
        let m = alphas.len() / targets.len();
        let q = targets
            .examples()
            .iter()
            .map(|(x, _)| x.squared_norm())
            .collect();
        let active = vec![true; alphas.len()];
        Ok(DualState {
            alphas,
            q,
            lambda: loss.lambda(c_target),
            upper: loss.upper_bound(c_target),
            active,
            cache: vec![0.0; m],
            cache_example: None,
        })
    }

    /// Dual variables in constraint order (index m·j + i).
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Cached squared norms of the target examples.
    pub fn target_norms(&self) -> &[f64] {
        &self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Upper bound on each dual variable (C̃ for L1 loss, infinite for L2).
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// Which constraints remain in the shrinking sweep.
    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Cached score products for the example the solver last visited, if any.
    pub fn cached_products(&self) -> Option<(usize, &[f64])> {
        self.cache_example.map(|j| (j, self.cache.as_slice()))
    }
}

/// A trained pairing of transform and one-vs-all classifiers.
#[derive(Debug, Clone)]
pub struct MmdtModel {
    pub(crate) transform: LowRankTransform,
    pub(crate) classifiers: HyperplaneSet,
    pub(crate) categories: Vec<String>,
    pub(crate) augment_bias: bool,
}

impl MmdtModel {
    pub fn new(
        transform: LowRankTransform,
        classifiers: HyperplaneSet,
        categories: Vec<String>,
        augment_bias: bool,
    ) -> Result<Self> {
        if classifiers.len() != categories.len() {
            return Err(Error::InvalidConfig(format!(
                "{} classifiers for {} categories",
                classifiers.len(),
                categories.len()
            )));
        }
        if classifiers.dim() != transform.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: transform.source_dim(),
                got: classifiers.dim(),
            });
        }
        for (i, name) in categories.iter().enumerate() {
            if categories[..i].contains(name) {
                return Err(Error::DuplicateCategory(name.clone()));
            }
        }
        Ok(MmdtModel {
            transform,
            classifiers,
            categories,
            augment_bias,
        })
    }

    pub fn transform(&self) -> &LowRankTransform {
        &self.transform
    }

    pub fn classifiers(&self) -> &HyperplaneSet {
        &self.classifiers
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn augment_bias(&self) -> bool {
        self.augment_bias
    }

    /// Dimension of raw target inputs expected by `predict`, before any
    /// internal bias augmentation.
    pub fn target_input_dim(&self) -> usize {
        self.transform.target_dim() - usize::from(self.augment_bias)
    }

    /// Dimension of raw source inputs, before bias augmentation.
    pub fn source_input_dim(&self) -> usize {
        self.transform.source_dim() - usize::from(self.augment_bias)
    }
}
