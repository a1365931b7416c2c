//! Scalable transform-based supervised domain adaptation.
//!
//! Learns a linear map W from a target feature space to a source feature
//! space jointly with one-vs-all max-margin classifiers. The transform
//! solver works on an implicit low-rank representation of W — per-class
//! coefficient rows, the generator Gram matrix, and cached target norms —
//! so one dual coordinate step costs time linear in the target dimension,
//! independent of the source side.
//!
//! Modules:
//! - [`types`]: feature vectors, datasets, solver configuration, models
//! - [`svm`]: dual coordinate descent linear SVM with shrinking
//! - [`transform`]: the implicit low-rank transform solver
//! - [`mmdt`]: alternating driver, prediction, new-category transfer
//! - [`data`]: sparse text I/O, synthetic shift benchmarks, persistence
//! - [`oracle`]: dense reference implementations for validation

pub mod data;
pub mod error;
pub mod mmdt;
pub mod oracle;
pub mod svm;
pub mod transform;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Dataset, DomainTag, DualState, FeatureVector, HyperplaneSet, Loss, LowRankTransform,
    MmdtModel, RegularizerMode, SolverConfig,
};
