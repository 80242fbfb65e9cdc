//! Agg-Var clustering.
//!
//! Each class owns a list of centroids. A new vector joins the nearest
//! centroid of its own class when strictly closer than the distance
//! threshold, otherwise it seeds a new centroid. Each centroid carries a
//! running diagonal variance maintained with Welford's recurrence.

mod snapshot;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::{ClassId, FeatureVector};
use crate::error::{Error, Result};
use crate::scalar::{squared_distance, Scalar};

pub use snapshot::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC};

#[derive(Debug, Clone, PartialEq)]
pub struct Centroid<T> {
    mean: Vec<T>,
    /// Per-dimension sum of squared deviations from the mean.
    m2: Vec<T>,
    count: usize,
}

impl<T: Scalar> Centroid<T> {
    pub fn from_point(x: &[T]) -> Self {
        Centroid {
            mean: x.to_vec(),
            m2: vec![T::zero(); x.len()],
            count: 1,
        }
    }

    /// Reassembles a centroid from stored statistics.
    pub fn from_parts(mean: Vec<T>, m2: Vec<T>, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::validation("centroid count must be >= 1"));
        }
        if mean.is_empty() || mean.len() != m2.len() {
            return Err(Error::validation("centroid mean and m2 lengths differ"));
        }
        if mean.iter().chain(&m2).any(|v| !v.is_finite()) || m2.iter().any(|&v| v < T::zero()) {
            return Err(Error::validation("centroid statistics must be finite, m2 >= 0"));
        }
        Ok(Centroid { mean, m2, count })
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn m2(&self) -> &[T] {
        &self.m2
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Unbiased per-dimension variance; zero for a single sample.
    pub fn variance(&self) -> Vec<T> {
        if self.count < 2 {
            return vec![T::zero(); self.mean.len()];
        }
        let denom = T::of_count(self.count - 1);
        self.m2.iter().map(|&s| s / denom).collect()
    }

    /// Weighted-mean update `(w * mean + x) / (w + 1)` with the matching
    /// Welford update of the squared deviations.
    pub fn absorb(&mut self, x: &[T]) {
        let w = T::of_count(self.count);
        let w1 = T::of_count(self.count + 1);
        for ((mean, m2), &xi) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let old = *mean;
            let new = (w * old + xi) / w1;
            *m2 += (xi - old) * (xi - new);
            *mean = new;
        }
        self.count += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel<T> {
    pub class_id: ClassId,
    centroids: Vec<Centroid<T>>,
    total_count: usize,
}

impl<T: Scalar> ClassModel<T> {
    pub fn new(class_id: ClassId, centroids: Vec<Centroid<T>>) -> Self {
        let total_count = centroids.iter().map(Centroid::count).sum();
        ClassModel {
            class_id,
            centroids,
            total_count,
        }
    }

    pub fn centroids(&self) -> &[Centroid<T>] {
        &self.centroids
    }

    /// Number of vectors absorbed into this class (N_y).
    pub fn total_count(&self) -> usize {
        self.total_count
    }

    /// Nearest centroid by index and squared distance; ties go to the lower index.
    fn nearest(&self, x: &[T]) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for (i, c) in self.centroids.iter().enumerate() {
            let d2 = squared_distance(c.mean(), x);
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best
    }
}

/// Where an inserted vector ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub class_id: ClassId,
    pub centroid_index: usize,
    pub created: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestCentroid<T> {
    pub class_id: ClassId,
    pub centroid_index: usize,
    pub distance: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassStats {
    pub class_id: ClassId,
    pub num_centroids: usize,
    pub total_count: usize,
}

/// All learned classes, keyed by class id.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStore<T> {
    dimension: usize,
    threshold: T,
    models: BTreeMap<ClassId, ClassModel<T>>,
}

impl<T: Scalar> ModelStore<T> {
    /// `threshold` is the Agg-Var distance threshold D; 0 disables merging.
    pub fn new(dimension: usize, threshold: T) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::validation("store dimension must be >= 1"));
        }
        if threshold.is_nan() || threshold < T::zero() {
            return Err(Error::validation("distance threshold must be >= 0"));
        }
        Ok(ModelStore {
            dimension,
            threshold,
            models: BTreeMap::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    pub fn models(&self) -> impl Iterator<Item = &ClassModel<T>> {
        self.models.values()
    }

    pub fn model(&self, class_id: ClassId) -> Option<&ClassModel<T>> {
        self.models.get(&class_id)
    }

    pub fn num_classes(&self) -> usize {
        self.models.len()
    }

    /// Learned class ids, ascending.
    pub fn class_ids(&self) -> Vec<ClassId> {
        self.models.keys().copied().collect()
    }

    pub fn num_centroids(&self) -> usize {
        self.models.values().map(|m| m.centroids.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_centroids() == 0
    }

    pub(crate) fn insert_model(&mut self, model: ClassModel<T>) -> Result<()> {
        if model.centroids.iter().any(|c| c.mean.len() != self.dimension) {
            return Err(Error::validation("centroid dimension does not match the store"));
        }
        self.models.insert(model.class_id, model);
        Ok(())
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::validation(format!(
                "vector has dimension {}, store expects {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }

    /// Agg-Var step for one labeled vector. Only centroids of `class_id` are
    /// considered; a distance exactly equal to the threshold creates a new
    /// centroid.
    pub fn insert(&mut self, class_id: ClassId, x: &FeatureVector<T>) -> Result<Assignment> {
        let x = x.as_slice();
        self.check_dim(x)?;
        let threshold = self.threshold;
        let model = self
            .models
            .entry(class_id)
            .or_insert_with(|| ClassModel::new(class_id, Vec::new()));
        model.total_count += 1;
        if let Some((i, d2)) = model.nearest(x) {
            if d2.sqrt() < threshold {
                model.centroids[i].absorb(x);
                return Ok(Assignment {
                    class_id,
                    centroid_index: i,
                    created: false,
                });
            }
        }
        model.centroids.push(Centroid::from_point(x));
        Ok(Assignment {
            class_id,
            centroid_index: model.centroids.len() - 1,
            created: true,
        })
    }

    /// Inserts every view of one labeled object, in order.
    pub fn learn_object(
        &mut self,
        class_id: ClassId,
        views: &[FeatureVector<T>],
    ) -> Result<Vec<Assignment>> {
        if views.is_empty() {
            return Err(Error::validation("cannot learn an object with no views"));
        }
        // validate up front so a bad view leaves the store untouched
        for v in views {
            self.check_dim(v.as_slice())?;
        }
        views.iter().map(|v| self.insert(class_id, v)).collect()
    }

    /// Nearest centroid over every class. Ties go to the lower class id, then
    /// the lower centroid index.
    pub fn closest_centroid(&self, x: &FeatureVector<T>) -> Result<ClosestCentroid<T>> {
        let x = x.as_slice();
        self.check_dim(x)?;
        let mut best: Option<(ClassId, usize, T)> = None;
        for model in self.models.values() {
            if let Some((i, d2)) = model.nearest(x) {
                if best.is_none_or(|(_, _, b)| d2 < b) {
                    best = Some((model.class_id, i, d2));
                }
            }
        }
        let (class_id, centroid_index, d2) = best.ok_or(Error::NoModel)?;
        Ok(ClosestCentroid {
            class_id,
            centroid_index,
            distance: d2.sqrt(),
        })
    }

    pub fn class_statistics(&self) -> Vec<ClassStats> {
        self.models
            .values()
            .map(|m| ClassStats {
                class_id: m.class_id,
                num_centroids: m.centroids.len(),
                total_count: m.total_count,
            })
            .collect()
    }
}
