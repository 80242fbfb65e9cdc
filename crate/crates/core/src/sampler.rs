//! Choosing which candidate objects to ask the oracle about.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::aggvar::ModelStore;
use crate::classifier::LinearClassifier;
use crate::dataset::{ClassId, Dataset, IncrementBatch, ObjectId, ObjectInstance};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Curiosity,
    Softmax,
    Random,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Curiosity => "curiosity",
            StrategyKind::Softmax => "softmax",
            StrategyKind::Random => "random",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curiosity" => Ok(StrategyKind::Curiosity),
            "softmax" => Ok(StrategyKind::Softmax),
            "random" => Ok(StrategyKind::Random),
            _ => Err(Error::validation(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Which end of the softmax-confidence ranking gets labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoftmaxDirection {
    /// Least confident first (uncertainty sampling).
    #[default]
    Lowest,
    Highest,
}

impl FromStr for SoftmaxDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowest" => Ok(SoftmaxDirection::Lowest),
            "highest" => Ok(SoftmaxDirection::Highest),
            _ => Err(Error::validation(format!("unknown softmax direction {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub lambda: f64,
    /// Labels per increment; clamped to the batch size.
    pub k: usize,
    pub softmax_direction: SoftmaxDirection,
    /// Min-max rescale the distance term over each batch before scoring.
    pub normalize_q: bool,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            lambda: 0.7,
            k: 1,
            softmax_direction: SoftmaxDirection::Lowest,
            normalize_q: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::validation("lambda must lie in [0, 1]"));
        }
        if self.k == 0 {
            return Err(Error::validation("label budget k must be >= 1"));
        }
        Ok(())
    }

    /// Short name used in output files, e.g. `softmax-lowest`.
    pub fn label(&self) -> String {
        match self.kind {
            StrategyKind::Softmax => match self.softmax_direction {
                SoftmaxDirection::Lowest => "softmax-lowest".into(),
                SoftmaxDirection::Highest => "softmax-highest".into(),
            },
            kind => kind.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuriosityScore<T> {
    pub object_id: ObjectId,
    /// Overall curiosity A.
    pub score: T,
    /// Distance term used in the score: the mean closest-centroid distance,
    /// or its batch-normalized value when normalization is on.
    pub q: T,
    /// Mean closest-centroid distance before any normalization.
    pub raw_q: T,
    /// How many views voted for each class.
    pub votes: BTreeMap<ClassId, usize>,
    /// Largest vote count.
    pub s_max: usize,
}

/// `A = lambda * q + (1 - lambda) / s_max`.
pub fn curiosity_value<T: Scalar>(q: T, s_max: usize, lambda: T) -> T {
    lambda * q + (T::one() - lambda) * (T::one() / T::of_count(s_max))
}

pub fn curiosity_score<T: Scalar>(
    object: &ObjectInstance<T>,
    store: &ModelStore<T>,
    lambda: T,
) -> Result<CuriosityScore<T>> {
    if object.views.is_empty() {
        return Err(Error::validation("object has no views"));
    }
    let mut total = T::zero();
    let mut votes = BTreeMap::new();
    for v in &object.views {
        let nearest = store.closest_centroid(v)?;
        total += nearest.distance;
        *votes.entry(nearest.class_id).or_insert(0usize) += 1;
    }
    let q = total / T::of_count(object.views.len());
    let s_max = votes.values().copied().max().expect("at least one vote");
    Ok(CuriosityScore {
        object_id: object.object_id,
        score: curiosity_value(q, s_max, lambda),
        q,
        raw_q: q,
        votes,
        s_max,
    })
}

/// Mean over views of the largest softmax probability.
pub fn softmax_confidence<T: Scalar>(
    object: &ObjectInstance<T>,
    clf: &LinearClassifier<T>,
) -> Result<T> {
    if object.views.is_empty() {
        return Err(Error::validation("object has no views"));
    }
    let mut total = T::zero();
    for v in &object.views {
        let p = clf.softmax_probs(v)?;
        total += p.into_iter().fold(T::zero(), T::max);
    }
    Ok(total / T::of_count(object.views.len()))
}

/// Per-candidate evidence behind a selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CandidateScore<T> {
    Curiosity(CuriosityScore<T>),
    Softmax { object_id: ObjectId, confidence: T },
    Random { object_id: ObjectId },
}

impl<T: Scalar> CandidateScore<T> {
    pub fn object_id(&self) -> ObjectId {
        match self {
            CandidateScore::Curiosity(s) => s.object_id,
            CandidateScore::Softmax { object_id, .. } | CandidateScore::Random { object_id } => {
                *object_id
            }
        }
    }

    /// Headline value: curiosity A or mean max-probability.
    pub fn value(&self) -> Option<T> {
        match self {
            CandidateScore::Curiosity(s) => Some(s.score),
            CandidateScore::Softmax { confidence, .. } => Some(*confidence),
            CandidateScore::Random { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection<T> {
    /// Selected object ids, best first.
    pub selected: Vec<ObjectId>,
    /// One entry per candidate, in batch order.
    pub scores: Vec<CandidateScore<T>>,
    /// True when the strategy had no model yet and fell back to random.
    pub cold_start: bool,
}

fn min_max_normalize<T: Scalar>(scores: &mut [CuriosityScore<T>], lambda: T) {
    let lo = scores.iter().map(|s| s.raw_q).fold(T::infinity(), T::min);
    let hi = scores.iter().map(|s| s.raw_q).fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    for s in scores {
        s.q = if span > T::zero() {
            (s.raw_q - lo) / span
        } else {
            T::zero()
        };
        s.score = curiosity_value(s.q, s.s_max, lambda);
    }
}

/// Ids of the `k` best candidates under `better`, ties to the lower id.
fn top_k<T: Scalar>(mut ranked: Vec<(ObjectId, T)>, k: usize, descending: bool) -> Vec<ObjectId> {
    ranked.sort_by(|a, b| {
        let by_value = a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal);
        let by_value = if descending { by_value.reverse() } else { by_value };
        by_value.then(a.0.cmp(&b.0))
    });
    ranked.into_iter().take(k).map(|(id, _)| id).collect()
}

/// Picks `min(k, |batch|)` candidates to label.
pub fn select_objects<T: Scalar, R: rand::Rng + ?Sized>(
    batch: &IncrementBatch,
    train: &Dataset<T>,
    cfg: &StrategyConfig,
    store: &ModelStore<T>,
    clf: Option<&LinearClassifier<T>>,
    rng: &mut R,
) -> Result<Selection<T>> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::validation("cannot select from an empty batch"));
    }
    let k = cfg.k.min(batch.len());
    let candidates: Vec<&ObjectInstance<T>> = batch.objects(train).collect();

    let random = |rng: &mut R, cold_start: bool| Selection {
        selected: index::sample(rng, candidates.len(), k)
            .into_iter()
            .map(|i| candidates[i].object_id)
            .collect(),
        scores: candidates
            .iter()
            .map(|o| CandidateScore::Random {
                object_id: o.object_id,
            })
            .collect(),
        cold_start,
    };

    match cfg.kind {
        StrategyKind::Random => Ok(random(rng, false)),
        StrategyKind::Curiosity if store.is_empty() => Ok(random(rng, true)),
        StrategyKind::Curiosity => {
            let lambda = T::of(cfg.lambda);
            let mut scores = candidates
                .iter()
                .map(|o| curiosity_score(o, store, lambda))
                .collect::<Result<Vec<_>>>()?;
            if cfg.normalize_q {
                min_max_normalize(&mut scores, lambda);
            }
            let selected = top_k(scores.iter().map(|s| (s.object_id, s.score)).collect(), k, true);
            Ok(Selection {
                selected,
                scores: scores.into_iter().map(CandidateScore::Curiosity).collect(),
                cold_start: false,
            })
        }
        StrategyKind::Softmax => match clf {
            None => Ok(random(rng, true)),
            Some(clf) => {
                let ranked = candidates
                    .iter()
                    .map(|o| Ok((o.object_id, softmax_confidence(o, clf)?)))
                    .collect::<Result<Vec<_>>>()?;
                let descending = cfg.softmax_direction == SoftmaxDirection::Highest;
                let selected = top_k(ranked.clone(), k, descending);
                Ok(Selection {
                    selected,
                    scores: ranked
                        .into_iter()
                        .map(|(object_id, confidence)| CandidateScore::Softmax {
                            object_id,
                            confidence,
                        })
                        .collect(),
                    cold_start: false,
                })
            }
        },
    }
}
