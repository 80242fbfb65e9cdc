//! Curiosity-driven online class-incremental learning over feature vectors.
//!
//! Classes are learned from object instances as they are labeled. Each class
//! is summarized by Agg-Var centroids with diagonal variance
//! ([`aggvar`]); a softmax linear layer ([`classifier`]) is retrained every
//! increment on pseudo-exemplars sampled from those centroids
//! ([`rehearsal`]). Under a label budget the learner asks about the objects
//! its centroids explain worst ([`sampler`]). The [`harness`] runs seeded
//! experiments comparing curiosity against softmax-confidence and random
//! selection.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision.

pub mod aggvar;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod rehearsal;
pub mod rng;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset32 = dataset::Dataset<f32>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type FeatureVector32 = dataset::FeatureVector<f32>;
pub type FeatureVector64 = dataset::FeatureVector<f64>;
pub type ModelStore32 = aggvar::ModelStore<f32>;
pub type ModelStore64 = aggvar::ModelStore<f64>;
pub type LinearClassifier32 = classifier::LinearClassifier<f32>;
pub type LinearClassifier64 = classifier::LinearClassifier<f64>;
