//! Pool generation by bagging, the shared majority-vote combiner, and the
//! AdaBoost static baseline.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{fnv1a64_init, fnv1a64_update, stable_hash64, Dataset};
use crate::error::{Error, Result};
use crate::linear::{argmax_first, train_perceptron, LinearClassifier, PerceptronConfig};

/// Ordered collection of base classifiers sharing dimensionality and classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pool {
    members: Vec<LinearClassifier>,
}

impl Pool {
    pub fn new(members: Vec<LinearClassifier>) -> Self {
        assert!(members.len() >= 2, "a pool needs at least two members");
        let d = members[0].n_features();
        let l = members[0].n_classes();
        assert!(
            members.iter().all(|m| m.n_features() == d && m.n_classes() == l),
            "pool members must share dimensionality"
        );
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, i: usize) -> &LinearClassifier {
        &self.members[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &LinearClassifier> {
        self.members.iter()
    }

    pub fn n_classes(&self) -> usize {
        self.members[0].n_classes()
    }

    /// Decision of every member for one sample.
    pub fn predict_all(&self, x: &[f64]) -> Vec<usize> {
        self.members.iter().map(|m| m.predict(x)).collect()
    }

    /// Stable content fingerprint over all member weights.
    pub fn fingerprint(&self) -> u64 {
        let mut h = fnv1a64_init();
        for m in &self.members {
            for w in m.weights() {
                h = fnv1a64_update(h, &w.to_le_bytes());
            }
        }
        h
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Pool> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Outcome of a majority vote over a classifier subset.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteOutcome {
    pub label: usize,
    /// Vote count per class.
    pub counts: Vec<usize>,
}

/// Majority vote of the given pool members, ties broken by the highest summed
/// posterior over the voters for the tied classes (then lowest class index).
pub fn majority_vote(pool: &Pool, members: &[usize], x: &[f64]) -> VoteOutcome {
    assert!(!members.is_empty(), "vote over an empty ensemble");
    let l = pool.n_classes();
    let mut counts = vec![0usize; l];
    for &i in members {
        counts[pool.get(i).predict(x)] += 1;
    }
    let top = *counts.iter().max().unwrap();
    let tied: Vec<usize> = (0..l).filter(|&c| counts[c] == top).collect();
    let label = if tied.len() == 1 {
        tied[0]
    } else {
        let mut summed = vec![0.0f64; l];
        for &i in members {
            for (c, p) in pool.get(i).posterior(x).into_iter().enumerate() {
                summed[c] += p;
            }
        }
        tied.iter()
            .copied()
            .max_by(|&a, &b| summed[a].partial_cmp(&summed[b]).unwrap().then(b.cmp(&a)))
            .unwrap()
    };
    VoteOutcome { label, counts }
}

const BOOTSTRAP_RETRY_CAP: usize = 100;

/// Draw one bootstrap sample (size N, with replacement) that covers every
/// class, redrawing up to a cap.
fn bootstrap_indices(ds: &Dataset, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = ds.n_samples();
    for _ in 0..BOOTSTRAP_RETRY_CAP {
        let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut seen = vec![false; ds.n_classes()];
        for &i in &indices {
            seen[ds.label(i)] = true;
        }
        if seen.iter().all(|&s| s) {
            return Ok(indices);
        }
    }
    Err(Error::BootstrapRetry)
}

/// Generate a pool of `m` perceptrons, one per bootstrap sample.
///
/// Every member derives its own rng stream from the pool seed and its index,
/// so members train independently (and in parallel) with reproducible
/// results.
pub fn bagging_generate(
    train: &Dataset,
    m: usize,
    seed: u64,
    config: PerceptronConfig,
) -> Result<Pool> {
    assert!(m >= 2, "pool size must be at least 2");
    let results: Vec<Result<LinearClassifier>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let member_seed = stable_hash64(&[
                &seed.to_le_bytes(),
                &(i as u64).to_le_bytes(),
                b"bootstrap",
            ]);
            let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
            let indices = bootstrap_indices(train, &mut rng)?;
            let sample = train.subset(&indices, format!("{}-boot{}", train.name, i));
            let train_seed =
                stable_hash64(&[&seed.to_le_bytes(), &(i as u64).to_le_bytes(), b"train"]);
            let mut clf = train_perceptron(&sample, config, train_seed);
            clf.trained_on = i as u64;
            Ok(clf)
        })
        .collect();
    let members = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Pool::new(members))
}

/// AdaBoost.M1 ensemble over perceptron weak learners trained on weighted
/// resamples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaBoost {
    pub members: Vec<LinearClassifier>,
    pub alphas: Vec<f64>,
}

impl AdaBoost {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Weighted vote: each member contributes its alpha to its predicted class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let l = self.members[0].n_classes();
        let mut votes = vec![0.0f64; l];
        for (m, &a) in self.members.iter().zip(&self.alphas) {
            votes[m.predict(x)] += a;
        }
        argmax_first(&votes)
    }

    pub fn evaluate(&self, test: &Dataset) -> f64 {
        let correct = (0..test.n_samples())
            .filter(|&i| self.predict(test.row(i)) == test.label(i))
            .count();
        correct as f64 / test.n_samples() as f64
    }
}

/// Train AdaBoost.M1 for up to `t` rounds.
///
/// Each round resamples the training set by the current weights, fits a
/// perceptron, and measures the weighted error on the full set. A round with
/// error >= 0.5 is discarded and training stops; zero error keeps the round
/// and stops. If the very first round is discarded the lone learner is kept
/// with unit weight so the combiner never faces an empty ensemble.
pub fn adaboost_train(
    train: &Dataset,
    t: usize,
    seed: u64,
    config: PerceptronConfig,
) -> Result<AdaBoost> {
    assert!(t >= 1, "at least one boosting round required");
    let n = train.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut alphas = Vec::new();
    let mut first_discarded: Option<LinearClassifier> = None;

    for round in 0..t {
        let indices = weighted_resample(&mut rng, &weights, train)?;
        let sample = train.subset(&indices, format!("{}-ada{}", train.name, round));
        let clf = train_perceptron(&sample, config, seed.wrapping_add(round as u64 + 1));

        let mut err = 0.0;
        let mut wrong = vec![false; n];
        for i in 0..n {
            if clf.predict(train.row(i)) != train.label(i) {
                err += weights[i];
                wrong[i] = true;
            }
        }

        if err >= 0.5 {
            if round == 0 {
                first_discarded = Some(clf);
            }
            break;
        }
        let clamped = err.max(1e-10);
        let beta = clamped / (1.0 - clamped);
        alphas.push((1.0 / beta).ln());
        members.push(clf);
        if err <= 0.0 {
            break;
        }

        for (w, &bad) in weights.iter_mut().zip(&wrong) {
            if !bad {
                *w *= beta;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
    }

    if members.is_empty() {
        members.push(first_discarded.expect("first round always produces a learner"));
        alphas.push(1.0);
    }
    Ok(AdaBoost { members, alphas })
}

fn weighted_resample(
    rng: &mut ChaCha8Rng,
    weights: &[f64],
    ds: &Dataset,
) -> Result<Vec<usize>> {
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap();
    for _ in 0..BOOTSTRAP_RETRY_CAP {
        let indices: Vec<usize> = (0..weights.len())
            .map(|_| {
                let u = rng.gen_range(0.0..total);
                cumulative.partition_point(|&c| c <= u).min(weights.len() - 1)
            })
            .collect();
        let mut seen = vec![false; ds.n_classes()];
        for &i in &indices {
            seen[ds.label(i)] = true;
        }
        if seen.iter().all(|&s| s) {
            return Ok(indices);
        }
    }
    Err(Error::BootstrapRetry)
}

/// Accuracy of a full-pool majority vote (the plain bagging combiner).
pub fn bagging_vote_accuracy(pool: &Pool, test: &Dataset) -> f64 {
    let all: Vec<usize> = (0..pool.len()).collect();
    let correct = (0..test.n_samples())
        .filter(|&i| majority_vote(pool, &all, test.row(i)).label == test.label(i))
        .count();
    correct as f64 / test.n_samples() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blob(n_per_class: usize) -> Dataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_per_class {
            let t = i as f64 / n_per_class as f64;
            features.extend_from_slice(&[-2.0 - t, t]);
            labels.push(0);
            features.extend_from_slice(&[2.0 + t, -t]);
            labels.push(1);
        }
        Dataset::new("blob", features, 2, labels, vec!["0".into(), "1".into()]).unwrap()
    }

    #[test]
    fn bagging_is_reproducible() {
        let ds = two_blob(20);
        let a = bagging_generate(&ds, 10, 99, PerceptronConfig::default()).unwrap();
        let b = bagging_generate(&ds, 10, 99, PerceptronConfig::default()).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = bagging_generate(&ds, 10, 100, PerceptronConfig::default()).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn bagging_redraws_until_classes_covered() {
        // two samples, one per class: a bootstrap of size 2 misses a class
        // half the time, so redraws must kick in for every member
        let ds = Dataset::new(
            "tiny",
            vec![-1.0, 0.0, 1.0, 0.0],
            2,
            vec![0, 1],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let pool = bagging_generate(&ds, 3, 7, PerceptronConfig::default()).unwrap();
        assert_eq!(pool.len(), 3);
        for m in pool.iter() {
            // both classes seen => the perceptron must have updated at least once
            assert!(m.weights().iter().any(|&w| w != 0.0));
        }
    }

    #[test]
    fn majority_vote_counts_and_tie_break() {
        let ds = two_blob(20);
        let pool = bagging_generate(&ds, 4, 1, PerceptronConfig::default()).unwrap();
        let out = majority_vote(&pool, &[0, 1, 2, 3], &[-2.5, 0.2]);
        assert_eq!(out.label, 0);
        assert_eq!(out.counts.iter().sum::<usize>(), 4);
    }

    #[test]
    fn vote_tie_resolved_by_summed_posterior() {
        // two members voting for different classes with asymmetric confidence
        let a = LinearClassifier::from_weights(vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0], 2, 2);
        let b = LinearClassifier::from_weights(vec![0.0, 0.0, 0.0, 0.5, 0.0, 0.0], 2, 2);
        let pool = Pool::new(vec![a, b]);
        let x = [1.0, 0.0];
        assert_eq!(pool.get(0).predict(&x), 0);
        assert_eq!(pool.get(1).predict(&x), 1);
        // oracle: sum posteriors independently
        let p0 = pool.get(0).posterior(&x);
        let p1 = pool.get(1).posterior(&x);
        let expected = if p0[0] + p1[0] >= p0[1] + p1[1] { 0 } else { 1 };
        assert_eq!(majority_vote(&pool, &[0, 1], &x).label, expected);
    }

    #[test]
    fn pool_json_roundtrip() {
        let ds = two_blob(10);
        let pool = bagging_generate(&ds, 3, 5, PerceptronConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.json");
        pool.save_json(&path).unwrap();
        let back = Pool::load_json(&path).unwrap();
        assert_eq!(pool.fingerprint(), back.fingerprint());
    }

    #[test]
    fn adaboost_stops_on_separable_data() {
        let ds = two_blob(20);
        let model = adaboost_train(&ds, 100, 3, PerceptronConfig::default()).unwrap();
        assert_eq!(model.len(), 1, "zero-error round ends training");
        assert_eq!(model.evaluate(&ds), 1.0);
    }

    #[test]
    fn adaboost_discards_half_error_round() {
        // two identical points with conflicting labels: any classifier errs
        // on exactly half the weight, so round 1 hits err == 0.5, is
        // discarded, and training stops with the unit-weight fallback
        let ds = Dataset::new(
            "conflict",
            vec![0.0, 0.0, 0.0, 0.0],
            2,
            vec![0, 1],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        let model = adaboost_train(&ds, 100, 11, PerceptronConfig::default()).unwrap();
        assert_eq!(model.len(), 1);
        assert_eq!(model.alphas, vec![1.0]);
        let _ = model.predict(&[0.0, 0.0]);
    }

    #[test]
    fn bagging_vote_beats_chance_on_blobs() {
        let ds = two_blob(40);
        let pool = bagging_generate(&ds, 11, 2, PerceptronConfig::default()).unwrap();
        assert!(bagging_vote_accuracy(&pool, &ds) > 0.9);
    }
}
