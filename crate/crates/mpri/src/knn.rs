//! K-nearest-neighbor classification with fully deterministic tie rules.
//!
//! Neighbors are ordered by squared Euclidean distance (the ordering is the
//! same as by distance, with no square root taken), distance ties broken by
//! lower training-row index. Among the k selected neighbors the majority
//! label wins; vote ties go to the smallest class id.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::itl::squared_distance;

/// An immutable fitted classifier: training rows, their nonzero class
/// labels, and the neighbor count `k <= N_t`.
#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    train_features: Array2<f64>,
    train_labels: Vec<u16>,
}

impl KnnModel {
    pub fn fit(train_features: Array2<f64>, train_labels: Vec<u16>, k: usize) -> Result<Self> {
        let n = train_features.nrows();
        if n == 0 || train_features.ncols() == 0 {
            return Err(Error::EmptySample);
        }
        if train_labels.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: train_labels.len(),
            });
        }
        if train_features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features"));
        }
        if train_labels.iter().any(|&l| l == 0) {
            return Err(Error::InvalidConfig(
                "training labels must be nonzero class ids".into(),
            ));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidConfig(format!(
                "k must lie in 1..={n}, got {k}"
            )));
        }
        Ok(KnnModel {
            k,
            train_features,
            train_labels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.train_features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn dim(&self) -> usize {
        self.train_features.ncols()
    }

    pub fn classify(&self, query: ArrayView1<'_, f64>) -> Result<u16> {
        knn_classify(self, query)
    }

    /// Classify each row of `queries`, in row order.
    pub fn classify_batch(&self, queries: &Array2<f64>) -> Result<Vec<u16>> {
        queries.rows().into_iter().map(|q| knn_classify(self, q)).collect()
    }
}

/// Majority label among the k nearest training rows of `query`.
pub fn knn_classify(model: &KnnModel, query: ArrayView1<'_, f64>) -> Result<u16> {
    if query.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            left: query.len(),
            right: model.dim(),
        });
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query vector"));
    }

    let mut order: Vec<(f64, usize)> = (0..model.len())
        .map(|i| (squared_distance(query, model.train_features.row(i)), i))
        .collect();
    order.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then(a.1.cmp(&b.1))
    });

    let mut votes: Vec<(u16, usize)> = Vec::with_capacity(model.k);
    for &(_, idx) in order.iter().take(model.k) {
        let label = model.train_labels[idx];
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some((_, count)) => *count += 1,
            None => votes.push((label, 1)),
        }
    }
    votes.sort_unstable_by_key(|&(label, _)| label);
    let mut best = votes[0];
    for &(label, count) in &votes[1..] {
        if count > best.1 {
            best = (label, count);
        }
    }
    Ok(best.0)
}
