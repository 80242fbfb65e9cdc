//! Object-instance datasets: the feature-pack file format, a synthetic
//! generator, session splits, increment schedules and the labeling oracle.

mod pack;
mod split;
mod synth;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use pack::{
    decode_feature_pack, encode_feature_pack, read_feature_pack, verify_pack, write_feature_pack,
    PackSummary, PACK_HEADER_LEN, PACK_MAGIC,
};
pub use split::{make_increments, split_by_session, IncrementBatch, Oracle};
pub use synth::{synth_generate, SynthConfig};

pub type ClassId = u32;
pub type ObjectId = u32;
pub type SessionId = u32;

/// One embedding. Non-empty and finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<T>(Vec<T>);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("feature vector must have dimension >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "feature vector entry {i} is not finite"
            )));
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    /// Changes precision; panics only if a value is not representable, which
    /// cannot happen between f32 and f64 for finite input.
    pub fn cast<U: Scalar>(&self) -> FeatureVector<U> {
        FeatureVector(self.0.iter().map(|v| U::of(v.as_f64())).collect())
    }
}

impl<T> AsRef<[T]> for FeatureVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// A physical object seen from `views.len()` viewpoints during one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance<T> {
    pub object_id: ObjectId,
    pub class_id: ClassId,
    pub session_id: SessionId,
    pub views: Vec<FeatureVector<T>>,
}

impl<T: Scalar> ObjectInstance<T> {
    pub fn num_views(&self) -> usize {
        self.views.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    dimension: usize,
    num_classes: u32,
    objects: Vec<ObjectInstance<T>>,
    class_names: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset and checks every structural invariant.
    pub fn new(
        dimension: usize,
        num_classes: u32,
        objects: Vec<ObjectInstance<T>>,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let ds = Dataset {
            dimension,
            num_classes,
            objects,
            class_names,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::validation("dataset dimension must be >= 1"));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.num_classes as usize {
                return Err(Error::validation(format!(
                    "{} class names for {} classes",
                    names.len(),
                    self.num_classes
                )));
            }
        }
        let mut seen = HashSet::with_capacity(self.objects.len());
        for obj in &self.objects {
            if !seen.insert(obj.object_id) {
                return Err(Error::validation(format!(
                    "duplicate object id {}",
                    obj.object_id
                )));
            }
            if obj.class_id >= self.num_classes {
                return Err(Error::validation(format!(
                    "object {} has class {} but the dataset declares {} classes",
                    obj.object_id, obj.class_id, self.num_classes
                )));
            }
            if obj.views.is_empty() {
                return Err(Error::validation(format!(
                    "object {} has no views",
                    obj.object_id
                )));
            }
            for (i, v) in obj.views.iter().enumerate() {
                if v.dim() != self.dimension {
                    return Err(Error::validation(format!(
                        "object {} view {i} has dimension {}, expected {}",
                        obj.object_id,
                        v.dim(),
                        self.dimension
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn objects(&self) -> &[ObjectInstance<T>] {
        &self.objects
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn num_views(&self) -> usize {
        self.objects.iter().map(|o| o.views.len()).sum()
    }

    /// Distinct session ids, ascending.
    pub fn sessions(&self) -> Vec<SessionId> {
        let mut s: Vec<_> = self.objects.iter().map(|o| o.session_id).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Number of objects per class, for every class that has at least one.
    pub fn objects_per_class(&self) -> BTreeMap<ClassId, usize> {
        let mut counts = BTreeMap::new();
        for o in &self.objects {
            *counts.entry(o.class_id).or_insert(0) += 1;
        }
        counts
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectInstance<T>> {
        self.objects.iter().find(|o| o.object_id == id)
    }

    /// Same dataset at another precision.
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            dimension: self.dimension,
            num_classes: self.num_classes,
            objects: self
                .objects
                .iter()
                .map(|o| ObjectInstance {
                    object_id: o.object_id,
                    class_id: o.class_id,
                    session_id: o.session_id,
                    views: o.views.iter().map(FeatureVector::cast).collect(),
                })
                .collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub(crate) fn with_objects(&self, objects: Vec<ObjectInstance<T>>) -> Dataset<T> {
        Dataset {
            dimension: self.dimension,
            num_classes: self.num_classes,
            objects,
            class_names: self.class_names.clone(),
        }
    }
}
