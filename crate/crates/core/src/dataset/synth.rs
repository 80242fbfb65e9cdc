//! Desk-scale synthetic stand-in for a multi-instance object corpus.
//!
//! Three-level Gaussian hierarchy: one center per class, one sub-center per
//! object instance around its class center, and views scattered around the
//! instance sub-center.

use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureVector, ObjectInstance};
use crate::error::{Error, Result};
use crate::rng::{derive, Rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_classes: u32,
    pub instances_per_class: u32,
    pub views_per_instance: u32,
    pub dimension: u32,
    pub class_center_spread: f64,
    pub intra_class_spread: f64,
    pub view_noise: f64,
    /// Instances are tagged with sessions round-robin over this count.
    #[serde(default = "one")]
    pub sessions: u32,
    /// When set, class centers lie in a random subspace of this rank instead
    /// of being isotropic in the full space. Expected center norm is the same.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_center_rank: Option<u32>,
}

fn one() -> u32 {
    1
}

impl SynthConfig {
    /// Benchmark used by the acceptance suite: 10 classes with 40 training
    /// and 10 held-out instances each (held-out = session 4), 5 views, d = 32,
    /// class centers in a rank-12 subspace.
    pub fn desk_benchmark() -> Self {
        SynthConfig {
            num_classes: 10,
            instances_per_class: 50,
            views_per_instance: 5,
            dimension: 32,
            class_center_spread: 1.0,
            intra_class_spread: 0.35,
            view_noise: 0.15,
            sessions: 5,
            class_center_rank: Some(12),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_classes", self.num_classes),
            ("instances_per_class", self.instances_per_class),
            ("views_per_instance", self.views_per_instance),
            ("dimension", self.dimension),
            ("sessions", self.sessions),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::validation(format!("{name} must be >= 1")));
            }
        }
        let spreads = [
            ("class_center_spread", self.class_center_spread),
            ("intra_class_spread", self.intra_class_spread),
        ];
        for (name, v) in spreads {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be > 0")));
            }
        }
        // zero view noise is allowed: every view equals its instance sub-center
        if !(self.view_noise.is_finite() && self.view_noise >= 0.0) {
            return Err(Error::validation("view_noise must be >= 0"));
        }
        if self.class_center_rank == Some(0) {
            return Err(Error::validation("class_center_rank must be >= 1"));
        }
        let total = self.num_classes as u64 * self.instances_per_class as u64;
        if total > u32::MAX as u64 {
            return Err(Error::validation("too many objects for u32 ids"));
        }
        Ok(())
    }
}

fn around(center: &[f64], scale: f64, rng: &mut Rng) -> Vec<f64> {
    center
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(rng);
            c + scale * z
        })
        .collect()
}

/// Deterministic in `(cfg, seed)`. Object ids are assigned class-major,
/// starting at 0.
pub fn synth_generate<T: Scalar>(cfg: &SynthConfig, seed: u64) -> Result<Dataset<T>> {
    cfg.validate()?;
    let mut rng = derive(seed, Stream::Synth, 0);
    let d = cfg.dimension as usize;
    let origin = vec![0.0; d];
    let centers: Vec<Vec<f64>> = match cfg.class_center_rank {
        None => (0..cfg.num_classes)
            .map(|_| around(&origin, cfg.class_center_spread, &mut rng))
            .collect(),
        Some(rank) => {
            let rank = rank as usize;
            // d x rank basis with N(0, 1/rank) entries keeps E|center|^2 at d * spread^2
            let basis = around(&vec![0.0; d * rank], (rank as f64).recip().sqrt(), &mut rng);
            (0..cfg.num_classes)
                .map(|_| {
                    let z = around(&vec![0.0; rank], cfg.class_center_spread, &mut rng);
                    basis
                        .chunks(rank)
                        .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect()
        }
    };

    let view_dist = Normal::new(0.0, cfg.view_noise).map_err(|e| Error::validation(e.to_string()))?;
    let mut objects = Vec::with_capacity((cfg.num_classes * cfg.instances_per_class) as usize);
    let mut next_id = 0u32;
    for (class_id, center) in centers.iter().enumerate() {
        for instance in 0..cfg.instances_per_class {
            let sub = around(center, cfg.intra_class_spread, &mut rng);
            let views = (0..cfg.views_per_instance)
                .map(|_| {
                    let v = sub
                        .iter()
                        .map(|&c| T::of(c + view_dist.sample(&mut rng)))
                        .collect();
                    FeatureVector::new(v)
                })
                .collect::<Result<Vec<_>>>()?;
            objects.push(ObjectInstance {
                object_id: next_id,
                class_id: class_id as u32,
                session_id: instance % cfg.sessions,
                views,
            });
            next_id += 1;
        }
    }
    Dataset::new(d, cfg.num_classes, objects, None)
}
