//! Pseudorehearsal: stand-in training data regenerated from centroid
//! statistics instead of stored exemplars.

use rand_distr::StandardNormal;
use serde::Serialize;

use crate::aggvar::{Centroid, ModelStore};
use crate::dataset::{ClassId, FeatureVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Real,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample<T> {
    pub features: FeatureVector<T>,
    pub label: ClassId,
    pub provenance: Provenance,
}

impl<T> LabeledExample<T> {
    pub fn real(features: FeatureVector<T>, label: ClassId) -> Self {
        LabeledExample {
            features,
            label,
            provenance: Provenance::Real,
        }
    }
}

/// Draws `centroid.count()` vectors from the diagonal Gaussian
/// `N(mean, variance)`. Dimensions with zero variance reproduce the mean
/// coordinate exactly and consume no randomness.
pub fn sample_pseudo_exemplars<T: Scalar, R: rand::Rng + ?Sized>(
    centroid: &Centroid<T>,
    rng: &mut R,
) -> Vec<FeatureVector<T>> {
    let std: Vec<T> = centroid.variance().into_iter().map(T::sqrt).collect();
    (0..centroid.count())
        .map(|_| {
            let v = centroid
                .mean()
                .iter()
                .zip(&std)
                .map(|(&mu, &s)| {
                    if s == T::zero() {
                        mu
                    } else {
                        let z: f64 = rng.sample(StandardNormal);
                        mu + s * T::of(z)
                    }
                })
                .collect();
            FeatureVector::new(v).expect("finite centroid statistics give finite samples")
        })
        .collect()
}

/// Pseudo-exemplars for every centroid of every learned class, in class then
/// centroid order. Class `y` contributes exactly `N_y` examples.
pub fn build_rehearsal_set<T: Scalar, R: rand::Rng + ?Sized>(
    store: &ModelStore<T>,
    rng: &mut R,
) -> Vec<LabeledExample<T>> {
    let mut out = Vec::new();
    for model in store.models() {
        for c in model.centroids() {
            out.extend(
                sample_pseudo_exemplars(c, rng)
                    .into_iter()
                    .map(|features| LabeledExample {
                        features,
                        label: model.class_id,
                        provenance: Provenance::Pseudo,
                    }),
            );
        }
    }
    out
}
