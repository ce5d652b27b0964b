//! Multi-class perceptrons: the weak base classifiers of every pool.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

/// One linear classifier: L hyperplanes, one score row per class.
///
/// Row layout is `[w_1..w_d, bias]`. Class scores are signed distances, i.e.
/// the raw activation `w·[x;1]` scaled by the feature-weight norm of the row,
/// so that rows with different magnitudes stay comparable. `predict`,
/// `posterior` and the decision ranking all share that score vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearClassifier {
    weights: Vec<f64>,
    d: usize,
    l: usize,
    /// Identifier of the bootstrap sample this member was trained on.
    pub trained_on: u64,
}

/// Perceptron training schedule, held fixed across all techniques.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerceptronConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1.0,
        }
    }
}

impl LinearClassifier {
    pub fn from_weights(weights: Vec<f64>, d: usize, l: usize) -> Self {
        assert_eq!(weights.len(), l * (d + 1), "weight buffer shape mismatch");
        assert!(l >= 2);
        Self {
            weights,
            d,
            l,
            trained_on: 0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.l
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * (self.d + 1)..(class + 1) * (self.d + 1)]
    }

    /// Raw activations `w_l·[x;1]`.
    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.d, "feature vector length mismatch");
        (0..self.l)
            .map(|c| {
                let row = self.row(c);
                let mut s = row[self.d];
                for (w, v) in row[..self.d].iter().zip(x) {
                    s += w * v;
                }
                s
            })
            .collect()
    }

    /// Signed distances: raw activations scaled by each row's feature norm.
    /// A zero-norm row falls back to its raw activation.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = self.raw_scores(x);
        for (c, s) in scores.iter_mut().enumerate() {
            let norm = self.feature_norm(c);
            if norm > 0.0 {
                *s /= norm;
            }
        }
        scores
    }

    fn feature_norm(&self, class: usize) -> f64 {
        self.row(class)[..self.d]
            .iter()
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Predicted class: argmax score, ties broken by the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_first(&self.scores(x))
    }

    /// Class probabilities: softmax over the signed distances.
    pub fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let scores = self.scores(x);
        softmax(&scores)
    }

    /// Perpendicular distance from `x` to the decision boundary between the
    /// two leading classes. Degenerate boundaries (zero weight difference)
    /// yield 0, the minimal-confidence reading.
    pub fn decision_distance(&self, x: &[f64]) -> f64 {
        let scores = self.scores(x);
        let (top, second) = top_two(&scores);
        let raw = self.raw_scores(x);
        let mut diff_norm_sq = 0.0;
        let (ra, rb) = (self.row(top), self.row(second));
        for i in 0..self.d {
            let w = ra[i] - rb[i];
            diff_norm_sq += w * w;
        }
        if diff_norm_sq <= 0.0 {
            return 0.0;
        }
        (raw[top] - raw[second]).abs() / diff_norm_sq.sqrt()
    }
}

pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn top_two(values: &[f64]) -> (usize, usize) {
    let top = argmax_first(values);
    let mut second = usize::MAX;
    for (i, &v) in values.iter().enumerate() {
        if i == top {
            continue;
        }
        if second == usize::MAX || v > values[second] {
            second = i;
        }
    }
    (top, second)
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Online multi-class perceptron: promote the true class row and demote the
/// predicted row on every mistake, for a fixed epoch budget. Sample order is
/// reshuffled each epoch from the given seed. No convergence requirement —
/// these are weak learners on purpose.
pub fn train_perceptron(
    ds: &Dataset,
    config: PerceptronConfig,
    seed: u64,
) -> LinearClassifier {
    assert!(ds.n_samples() >= 1, "training set must be non-empty");
    assert!(config.epochs >= 1, "at least one epoch required");
    let d = ds.n_features();
    let l = ds.n_classes();
    let mut clf = LinearClassifier::from_weights(vec![0.0; l * (d + 1)], d, l);
    clf.trained_on = seed;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..ds.n_samples()).collect();
    let lr = config.learning_rate;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = ds.row(i);
            let truth = ds.label(i);
            let predicted = clf.predict(x);
            if predicted != truth {
                let stride = d + 1;
                for (j, &v) in x.iter().enumerate() {
                    clf.weights[truth * stride + j] += lr * v;
                    clf.weights[predicted * stride + j] -= lr * v;
                }
                clf.weights[truth * stride + d] += lr;
                clf.weights[predicted * stride + d] -= lr;
            }
        }
    }
    clf
}

/// Fraction of samples a classifier labels correctly.
pub fn accuracy(clf: &LinearClassifier, ds: &Dataset) -> f64 {
    let correct = (0..ds.n_samples())
        .filter(|&i| clf.predict(ds.row(i)) == ds.label(i))
        .count();
    correct as f64 / ds.n_samples() as f64
}
