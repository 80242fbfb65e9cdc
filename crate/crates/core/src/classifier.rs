//! Single linear layer trained with softmax cross-entropy by mini-batch SGD.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset, FeatureVector};
use crate::error::{Error, Result};
use crate::rehearsal::LabeledExample;
use crate::rng::{derive, Stream};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            learning_rate: 0.01,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("epochs must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation("learning rate must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch size must be >= 1"));
        }
        Ok(())
    }
}

/// Parameter-shaped gradient of the mean loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier<T> {
    dimension: usize,
    /// Row-major, one row per entry of `class_ids`.
    weights: Vec<T>,
    biases: Vec<T>,
    class_ids: Vec<ClassId>,
}

impl<T: Scalar> LinearClassifier<T> {
    pub fn zeros(class_ids: Vec<ClassId>, dimension: usize) -> Result<Self> {
        let n = class_ids.len();
        Self::from_parts(class_ids, dimension, vec![T::zero(); n * dimension], vec![T::zero(); n])
    }

    pub fn from_parts(
        class_ids: Vec<ClassId>,
        dimension: usize,
        weights: Vec<T>,
        biases: Vec<T>,
    ) -> Result<Self> {
        if class_ids.is_empty() || dimension == 0 {
            return Err(Error::validation("classifier needs >= 1 class and dimension >= 1"));
        }
        let mut sorted = class_ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != class_ids.len() {
            return Err(Error::validation("classifier class ids must be distinct"));
        }
        if weights.len() != class_ids.len() * dimension || biases.len() != class_ids.len() {
            return Err(Error::validation("classifier parameter shapes do not match"));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::validation("classifier parameters must be finite"));
        }
        Ok(LinearClassifier {
            dimension,
            weights,
            biases,
            class_ids,
        })
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    fn row(&self, r: usize) -> &[T] {
        &self.weights[r * self.dimension..(r + 1) * self.dimension]
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::validation(format!(
                "input has dimension {}, classifier expects {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }

    fn logits_unchecked(&self, x: &[T]) -> Vec<T> {
        (0..self.class_ids.len())
            .map(|r| dot(self.row(r), x) + self.biases[r])
            .collect()
    }

    pub fn logits(&self, x: &FeatureVector<T>) -> Result<Vec<T>> {
        self.check_dim(x.as_slice())?;
        Ok(self.logits_unchecked(x.as_slice()))
    }

    /// Argmax of the logits; ties go to the lowest row.
    pub fn predict(&self, x: &FeatureVector<T>) -> Result<ClassId> {
        let logits = self.logits(x)?;
        Ok(self.class_ids[argmax(&logits)])
    }

    /// Softmax over the logits, shifted by the max logit before exponentiation.
    pub fn softmax_probs(&self, x: &FeatureVector<T>) -> Result<Vec<T>> {
        let mut z = self.logits(x)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Fraction of all views of all test objects predicted correctly. Objects
    /// of classes the classifier has never seen count as errors.
    pub fn evaluate(&self, test: &Dataset<T>) -> Result<f64> {
        if test.num_views() == 0 {
            return Err(Error::validation("cannot evaluate on an empty test set"));
        }
        self.check_dim(&vec![T::zero(); test.dimension()])?;
        let mut correct = 0usize;
        for obj in test.objects() {
            for v in &obj.views {
                if self.class_ids[argmax(&self.logits_unchecked(v.as_slice()))] == obj.class_id {
                    correct += 1;
                }
            }
        }
        Ok(correct as f64 / test.num_views() as f64)
    }

    fn row_of(&self, label: ClassId) -> Result<usize> {
        self.class_ids
            .iter()
            .position(|&c| c == label)
            .ok_or_else(|| Error::validation(format!("label {label} is not a classifier class")))
    }

    /// Mean softmax cross-entropy over `examples` and its gradient.
    pub fn loss_and_gradient(&self, examples: &[LabeledExample<T>]) -> Result<(T, Gradient<T>)> {
        let rows = examples
            .iter()
            .map(|e| {
                self.check_dim(e.features.as_slice())?;
                self.row_of(e.label)
            })
            .collect::<Result<Vec<_>>>()?;
        let batch: Vec<(&[T], usize)> = examples
            .iter()
            .zip(rows)
            .map(|(e, r)| (e.features.as_slice(), r))
            .collect();
        Ok(self.batch_loss_and_gradient(&batch))
    }

    fn batch_loss_and_gradient(&self, batch: &[(&[T], usize)]) -> (T, Gradient<T>) {
        let n_rows = self.class_ids.len();
        let d = self.dimension;
        let mut gw = vec![T::zero(); n_rows * d];
        let mut gb = vec![T::zero(); n_rows];
        let mut p = vec![T::zero(); n_rows];
        let mut loss = T::zero();
        for &(x, target) in batch {
            for (r, z) in p.iter_mut().enumerate() {
                *z = dot(self.row(r), x) + self.biases[r];
            }
            loss += log_sum_exp(&p) - p[target];
            softmax_in_place(&mut p);
            p[target] -= T::one();
            for (r, &g) in p.iter().enumerate() {
                gb[r] += g;
                for (w, &xi) in gw[r * d..(r + 1) * d].iter_mut().zip(x) {
                    *w += g * xi;
                }
            }
        }
        let n = T::of_count(batch.len());
        gw.iter_mut().chain(gb.iter_mut()).for_each(|g| *g /= n);
        (
            loss / n,
            Gradient {
                weights: gw,
                biases: gb,
            },
        )
    }

    /// Trains from zero initialization. Rows follow `class_ids`; every label
    /// must be one of them.
    pub fn train(
        data: &[LabeledExample<T>],
        class_ids: Vec<ClassId>,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        Self::fit(data, class_ids, cfg).map(|(clf, _)| clf)
    }

    /// Trains with rows `0..num_classes` labeled by their index.
    pub fn train_dense(data: &[LabeledExample<T>], num_classes: u32, cfg: &TrainConfig) -> Result<Self> {
        Self::train(data, (0..num_classes).collect(), cfg)
    }

    /// Like [`train`](Self::train), also returning the mean loss seen during
    /// each epoch.
    pub fn fit(
        data: &[LabeledExample<T>],
        class_ids: Vec<ClassId>,
        cfg: &TrainConfig,
    ) -> Result<(Self, Vec<f64>)> {
        cfg.validate()?;
        let first = data
            .first()
            .ok_or_else(|| Error::validation("cannot train on an empty data set"))?;
        let mut clf = Self::zeros(class_ids, first.features.dim())?;
        let mut examples = data
            .iter()
            .map(|e| {
                clf.check_dim(e.features.as_slice())?;
                Ok((e.features.as_slice(), clf.row_of(e.label)?))
            })
            .collect::<Result<Vec<_>>>()?;

        let lr = T::of(cfg.learning_rate);
        let mut rng = derive(cfg.seed, Stream::Training, 0);
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            examples.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in examples.chunks(cfg.batch_size) {
                let (loss, grad) = clf.batch_loss_and_gradient(batch);
                let loss = loss.as_f64();
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, loss });
                }
                epoch_loss += loss * batch.len() as f64;
                for (w, g) in clf.weights.iter_mut().zip(&grad.weights) {
                    *w -= lr * *g;
                }
                for (b, g) in clf.biases.iter_mut().zip(&grad.biases) {
                    *b -= lr * *g;
                }
            }
            if clf.weights.iter().chain(&clf.biases).any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    loss: f64::INFINITY,
                });
            }
            history.push(epoch_loss / examples.len() as f64);
        }
        Ok((clf, history))
    }
}

/// Index of the first maximum.
pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let max = z[argmax(z)];
    max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

fn softmax_in_place<T: Scalar>(z: &mut [T]) {
    let max = z[argmax(z)];
    let mut total = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}
