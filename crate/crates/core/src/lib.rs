//! Semantic-similarity OOD benchmarking: WordNet taxonomy similarity,
//! ID/OOD class partitioning and manifest generation, confidence- and
//! one-class-SVM-based OOD scoring on precomputed matrices, evaluation
//! metrics, and misclassification-graph analysis.

pub mod benchforge;
pub mod error;
pub mod metrics;
pub mod oodl;
pub mod predgraph;
pub mod refdata;
pub mod rng;
pub mod scorers;
pub mod store;
pub mod wordnet;

pub use error::{Error, Result};
pub use store::{FeatureArchive, Matrix, SampleMatrix};
