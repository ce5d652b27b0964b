//! The five meta-feature sets describing a base classifier's behavior around
//! a query, and their assembly into one fixed-layout vector.

use serde::{Deserialize, Serialize};

use crate::dataset::{scale_value, Dataset};
use crate::linear::LinearClassifier;
use crate::region::{Neighborhood, ProfileTable};

/// One meta-example: the feature vector for a (classifier, query) pair plus
/// its competence label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaSample {
    pub features: Vec<f64>,
    /// 1 = the classifier labels the query correctly.
    pub competent: bool,
    pub classifier_index: usize,
    pub query_index: usize,
}

/// Total vector length: K hard flags, K posteriors, the mean, Kp profile
/// flags, and the confidence scalar.
pub fn meta_vector_len(k: usize, kp: usize) -> usize {
    2 * k + kp + 2
}

/// Hard classification of each neighbor: flag k is 1 iff the classifier
/// labels neighbor k correctly, in ascending-distance order.
pub fn extract_f1(
    clf: &LinearClassifier,
    region: &Neighborhood,
    reference: &Dataset,
) -> Vec<f64> {
    region
        .indices
        .iter()
        .map(|&i| f64::from(clf.predict(reference.row(i)) == reference.label(i)))
        .collect()
}

/// Posterior probability assigned to each neighbor's true class.
pub fn extract_f2(
    clf: &LinearClassifier,
    region: &Neighborhood,
    reference: &Dataset,
) -> Vec<f64> {
    region
        .indices
        .iter()
        .map(|&i| clf.posterior(reference.row(i))[reference.label(i)])
        .collect()
}

/// Overall local accuracy: the mean of the f1 flags.
pub fn extract_f3(f1: &[f64]) -> f64 {
    f1.iter().sum::<f64>() / f1.len() as f64
}

/// Decision-space accuracy: flag k is 1 iff the recorded decision of member
/// `classifier_index` for profile-neighbor k's source sample matches that
/// sample's true label.
pub fn extract_f4(
    classifier_index: usize,
    profile_nbrs: &Neighborhood,
    table: &ProfileTable,
) -> Vec<f64> {
    profile_nbrs
        .indices
        .iter()
        .map(|&j| f64::from(table.entry(j, classifier_index) == table.true_label(j)))
        .collect()
}

/// Per-classifier min-max bounds for the confidence feature, fitted over the
/// decision distances observed for the meta-training queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct F5Normalizer {
    bounds: Vec<(f64, f64)>,
}

impl F5Normalizer {
    /// `distances[i]` holds the raw decision distances of classifier `i`.
    pub fn fit(distances: &[Vec<f64>]) -> Self {
        let bounds = distances
            .iter()
            .map(|ds| {
                ds.iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), &d| (lo.min(d), hi.max(d)),
                )
            })
            .collect();
        Self { bounds }
    }

    pub fn n_classifiers(&self) -> usize {
        self.bounds.len()
    }

    /// Normalized confidence in [0,1]; values outside the fitted range clamp.
    pub fn apply(&self, classifier_index: usize, distance: f64) -> f64 {
        scale_value(distance, self.bounds[classifier_index])
    }
}

/// Classifier confidence for the query itself.
pub fn extract_f5(
    clf: &LinearClassifier,
    x: &[f64],
    norms: &F5Normalizer,
    classifier_index: usize,
) -> f64 {
    norms.apply(classifier_index, clf.decision_distance(x))
}

/// Fixed layout `[f1 | f2 | f3 | f4 | f5]`. The meta-classifier depends on
/// this order never changing.
pub fn assemble(f1: &[f64], f2: &[f64], f3: f64, f4: &[f64], f5: f64) -> Vec<f64> {
    assert_eq!(f1.len(), f2.len(), "f1 and f2 must share K");
    let mut v = Vec::with_capacity(meta_vector_len(f1.len(), f4.len()));
    v.extend_from_slice(f1);
    v.extend_from_slice(f2);
    v.push(f3);
    v.extend_from_slice(f4);
    v.push(f5);
    v
}
