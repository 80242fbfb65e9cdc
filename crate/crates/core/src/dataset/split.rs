use std::cell::Cell;
use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{ClassId, Dataset, ObjectId, ObjectInstance, SessionId};
use crate::error::{Error, Result};
use crate::rng::{derive, Stream};
use crate::scalar::Scalar;

/// Partitions objects by recording session. Fails if either half is empty or
/// a requested test session does not occur in the dataset.
pub fn split_by_session<T: Scalar>(
    ds: &Dataset<T>,
    test_sessions: &BTreeSet<SessionId>,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let present = ds.sessions();
    if let Some(s) = test_sessions.iter().find(|s| !present.contains(s)) {
        return Err(Error::validation(format!(
            "test session {s} not present (sessions: {present:?})"
        )));
    }
    let (test, train): (Vec<_>, Vec<_>) = ds
        .objects()
        .iter()
        .cloned()
        .partition(|o| test_sessions.contains(&o.session_id));
    if train.is_empty() {
        return Err(Error::validation("session split leaves no training objects"));
    }
    if test.is_empty() {
        return Err(Error::validation("session split leaves no test objects"));
    }
    Ok((ds.with_objects(train), ds.with_objects(test)))
}

/// Candidates offered in one increment, as indices into the training set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncrementBatch {
    pub increment_index: usize,
    pub candidates: Vec<usize>,
}

impl IncrementBatch {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn objects<'a, T>(
        &'a self,
        train: &'a Dataset<T>,
    ) -> impl Iterator<Item = &'a ObjectInstance<T>> + 'a
    where
        T: Scalar,
    {
        self.candidates.iter().map(move |&i| &train.objects()[i])
    }
}

/// Seeded permutation of the training objects chunked into batches of `m`.
/// The last batch holds the remainder when `m` does not divide the count.
pub fn make_increments<T: Scalar>(
    train: &Dataset<T>,
    m: usize,
    seed: u64,
) -> Result<Vec<IncrementBatch>> {
    if m == 0 {
        return Err(Error::validation("batch size m must be >= 1"));
    }
    if train.is_empty() {
        return Err(Error::validation("cannot schedule an empty training set"));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut derive(seed, Stream::Schedule, 0));
    Ok(order
        .chunks(m)
        .enumerate()
        .map(|(increment_index, c)| IncrementBatch {
            increment_index,
            candidates: c.to_vec(),
        })
        .collect())
}

/// Answers label queries from the ground truth and counts them.
#[derive(Debug)]
pub struct Oracle {
    labels: HashMap<ObjectId, ClassId>,
    queries: Cell<usize>,
}

impl Oracle {
    pub fn new<T: Scalar>(ds: &Dataset<T>) -> Self {
        Oracle {
            labels: ds.objects().iter().map(|o| (o.object_id, o.class_id)).collect(),
            queries: Cell::new(0),
        }
    }

    pub fn label<T>(&self, object: &ObjectInstance<T>) -> Result<ClassId> {
        let label = self.labels.get(&object.object_id).copied().ok_or_else(|| {
            Error::validation(format!("object {} unknown to the oracle", object.object_id))
        })?;
        self.queries.set(self.queries.get() + 1);
        Ok(label)
    }

    pub fn queries(&self) -> usize {
        self.queries.get()
    }
}
