//! Region-of-competence search in feature space, output profiles, and
//! decision-space neighbor search.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::pool::Pool;

/// K nearest samples of a query in some reference set, ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn k_nearest(
    mut candidates: Vec<(f64, usize)>,
    k: usize,
    have: usize,
) -> Result<Neighborhood> {
    if candidates.len() < k {
        return Err(Error::ReferenceTooSmall { have, want: k });
    }
    // distance ties broken by the lower sample index
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    candidates.truncate(k);
    Ok(Neighborhood {
        indices: candidates.iter().map(|&(_, i)| i).collect(),
        distances: candidates.iter().map(|&(d, _)| d).collect(),
    })
}

/// K nearest neighbors of `x` in `reference` by Euclidean distance.
///
/// `exclude` removes the query's own row during meta-training, where the
/// query is itself a member of the reference set.
pub fn knn_region(
    x: &[f64],
    reference: &Dataset,
    k: usize,
    exclude: Option<usize>,
) -> Result<Neighborhood> {
    assert!(k >= 1);
    assert_eq!(x.len(), reference.n_features(), "query dimension mismatch");
    let candidates: Vec<(f64, usize)> = (0..reference.n_samples())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (euclidean(x, reference.row(i)), i))
        .collect();
    let have = candidates.len();
    k_nearest(candidates, k, have)
}

/// Crisp decisions of every pool member for every sample of a dataset,
/// alongside the true labels. Row j is the output profile of sample j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileTable {
    entries: Vec<usize>,
    m: usize,
    true_labels: Vec<usize>,
    n_classes: usize,
}

impl ProfileTable {
    pub fn n_rows(&self) -> usize {
        self.true_labels.len()
    }

    pub fn pool_size(&self) -> usize {
        self.m
    }

    /// Output profile of sample `j`: the decision of each member.
    pub fn row(&self, j: usize) -> &[usize] {
        &self.entries[j * self.m..(j + 1) * self.m]
    }

    /// Recorded decision of member `i` for sample `j`.
    pub fn entry(&self, j: usize, i: usize) -> usize {
        self.entries[j * self.m + i]
    }

    pub fn true_label(&self, j: usize) -> usize {
        self.true_labels[j]
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
}

/// Evaluate the pool on every sample once; the table is immutable afterwards.
pub fn build_profiles(ds: &Dataset, pool: &Pool) -> ProfileTable {
    let m = pool.len();
    let mut entries = Vec::with_capacity(ds.n_samples() * m);
    for j in 0..ds.n_samples() {
        entries.extend(pool.predict_all(ds.row(j)));
    }
    ProfileTable {
        entries,
        m,
        true_labels: ds.labels().to_vec(),
        n_classes: ds.n_classes(),
    }
}

/// Euclidean distance between two output profiles under one-hot encoding.
///
/// Each differing entry contributes 2 to the squared distance, so this equals
/// `sqrt(2 * hamming)` without materializing the encoding.
pub fn profile_distance(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "profiles must share the pool size");
    let differing = a.iter().zip(b).filter(|(x, y)| x != y).count();
    (2.0 * differing as f64).sqrt()
}

/// The `kp` most similar output profiles to `profile` within the table.
pub fn profile_neighbors(
    profile: &[usize],
    table: &ProfileTable,
    kp: usize,
    exclude: Option<usize>,
) -> Result<Neighborhood> {
    assert!(kp >= 1);
    assert_eq!(profile.len(), table.pool_size(), "profile length mismatch");
    let candidates: Vec<(f64, usize)> = (0..table.n_rows())
        .filter(|&j| Some(j) != exclude)
        .map(|j| (profile_distance(profile, table.row(j)), j))
        .collect();
    let have = candidates.len();
    k_nearest(candidates, kp, have)
}

/// Fraction of pool members voting for the plurality class, in `[1/L, 1]`.
pub fn consensus(x: &[f64], pool: &Pool) -> f64 {
    let mut counts = vec![0usize; pool.n_classes()];
    for vote in pool.predict_all(x) {
        counts[vote] += 1;
    }
    *counts.iter().max().unwrap() as f64 / pool.len() as f64
}
