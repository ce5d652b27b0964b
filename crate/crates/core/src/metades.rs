//! Orchestration of the meta-learning selection framework: the meta-training
//! pass that builds the selector's training set, and the generalization pass
//! that picks a per-query ensemble.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::meta_features::{
    assemble, extract_f1, extract_f2, extract_f3, extract_f4, F5Normalizer, MetaSample,
};
use crate::mlp::{train_meta, MetaClassifier, MetaTrainConfig};
use crate::pool::{majority_vote, Pool};
use crate::region::{build_profiles, consensus, knn_region, profile_neighbors, ProfileTable};

/// Framework hyper-parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetaDesParams {
    /// Region-of-competence size.
    pub k: usize,
    /// Output-profile neighborhood size.
    pub kp: usize,
    /// Consensus threshold: queries whose pool consensus falls below it feed
    /// the meta-training set. 1.0 disables the filter entirely (consensus
    /// never exceeds 1, so every query is admitted).
    pub h_c: f64,
}

impl Default for MetaDesParams {
    fn default() -> Self {
        Self {
            k: 7,
            kp: 5,
            h_c: 0.70,
        }
    }
}

impl MetaDesParams {
    fn admits(&self, consensus: f64) -> bool {
        self.h_c >= 1.0 || consensus < self.h_c
    }
}

/// Everything the generalization pass needs: the pool, the trained selector,
/// the selection dataset with its precomputed profiles, and the confidence
/// normalization fitted during meta-training.
#[derive(Debug, Clone)]
pub struct MetaDes {
    pool: Pool,
    selector: MetaClassifier,
    dsel: Dataset,
    dsel_profiles: ProfileTable,
    f5: F5Normalizer,
    params: MetaDesParams,
}

/// Outcome of classifying one query.
#[derive(Debug, Clone)]
pub struct Decision {
    pub label: usize,
    /// Pool indices of the selected ensemble (after fallback, never empty).
    pub selected: Vec<usize>,
    /// True when no classifier was deemed competent and the single most
    /// confident one was used instead.
    pub fallback: bool,
    /// Vote count per class over the selected ensemble.
    pub votes: Vec<usize>,
}

/// Per-query evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_index: usize,
    pub selected_size: usize,
    pub predicted: usize,
    pub truth: usize,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub accuracy: f64,
    pub records: Vec<QueryRecord>,
}

impl Evaluation {
    pub fn mean_selected_size(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.selected_size as f64).sum::<f64>()
            / self.records.len() as f64
    }

    /// Diagnostic log: query index, ensemble size, predicted, true.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["query_index", "selected_size", "predicted", "true"])?;
        for r in &self.records {
            w.write_record(&[
                r.query_index.to_string(),
                r.selected_size.to_string(),
                r.predicted.to_string(),
                r.truth.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Build the selector's training set from the meta-training partition.
///
/// Queries whose pool consensus passes the filter contribute one meta-example
/// per pool member. Neighborhoods exclude the query's own row so its label
/// never leaks into its own features. The confidence bounds are fitted over
/// the admitted queries before any vector is assembled.
pub fn extract_meta_set(
    pool: &Pool,
    meta_train: &Dataset,
    params: &MetaDesParams,
) -> Result<(Vec<MetaSample>, F5Normalizer)> {
    let m = pool.len();
    let profiles = build_profiles(meta_train, pool);

    let admitted: Vec<usize> = (0..meta_train.n_samples())
        .filter(|&j| params.admits(consensus(meta_train.row(j), pool)))
        .collect();
    if admitted.is_empty() {
        return Err(Error::EmptyMetaSet);
    }

    // fit pass: confidence bounds per classifier over the admitted queries
    let distances: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            admitted
                .iter()
                .map(|&j| pool.get(i).decision_distance(meta_train.row(j)))
                .collect()
        })
        .collect();
    let f5 = F5Normalizer::fit(&distances);

    let per_query: Vec<Result<Vec<MetaSample>>> = admitted
        .par_iter()
        .map(|&j| {
            let x = meta_train.row(j);
            let region = knn_region(x, meta_train, params.k, Some(j))?;
            let nbrs = profile_neighbors(profiles.row(j), &profiles, params.kp, Some(j))?;
            let truth = meta_train.label(j);
            let mut out = Vec::with_capacity(m);
            for i in 0..m {
                let clf = pool.get(i);
                let f1 = extract_f1(clf, &region, meta_train);
                let f2 = extract_f2(clf, &region, meta_train);
                let f3 = extract_f3(&f1);
                let f4 = extract_f4(i, &nbrs, &profiles);
                let f5v = f5.apply(i, clf.decision_distance(x));
                out.push(MetaSample {
                    features: assemble(&f1, &f2, f3, &f4, f5v),
                    competent: clf.predict(x) == truth,
                    classifier_index: i,
                    query_index: j,
                });
            }
            Ok(out)
        })
        .collect();

    let mut samples = Vec::with_capacity(admitted.len() * m);
    for q in per_query {
        samples.extend(q?);
    }
    Ok((samples, f5))
}

/// Run the full meta-training pass and assemble a ready-to-query model.
///
/// The pool must already be trained on a partition disjoint from
/// `meta_train`; `dsel` supplies neighborhoods at query time and must hold at
/// least `k` samples and `kp` profile rows.
pub fn meta_train(
    pool: Pool,
    meta_train: &Dataset,
    dsel: Dataset,
    params: MetaDesParams,
    train_cfg: MetaTrainConfig,
) -> Result<MetaDes> {
    let (samples, f5) = extract_meta_set(&pool, meta_train, &params)?;
    let selector = train_meta(&samples, train_cfg)?;
    MetaDes::assemble(pool, selector, dsel, f5, params)
}

impl MetaDes {
    /// Wire a model from parts. Used by meta-training, model loading, and
    /// tests that rig the selector.
    pub fn assemble(
        pool: Pool,
        selector: MetaClassifier,
        dsel: Dataset,
        f5: F5Normalizer,
        params: MetaDesParams,
    ) -> Result<Self> {
        if dsel.n_samples() < params.k {
            return Err(Error::ReferenceTooSmall {
                have: dsel.n_samples(),
                want: params.k,
            });
        }
        if dsel.n_samples() < params.kp {
            return Err(Error::ReferenceTooSmall {
                have: dsel.n_samples(),
                want: params.kp,
            });
        }
        if f5.n_classifiers() != pool.len() {
            return Err(Error::DimensionMismatch {
                expected: pool.len(),
                got: f5.n_classifiers(),
            });
        }
        let dsel_profiles = build_profiles(&dsel, &pool);
        Ok(Self {
            pool,
            selector,
            dsel,
            dsel_profiles,
            f5,
            params,
        })
    }

    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn params(&self) -> &MetaDesParams {
        &self.params
    }

    pub fn selector(&self) -> &MetaClassifier {
        &self.selector
    }

    /// Meta-feature vector of every pool member for one query, in pool order.
    pub fn meta_vectors(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let region = knn_region(x, &self.dsel, self.params.k, None)
            .expect("dsel size validated at construction");
        let profile = self.pool.predict_all(x);
        let nbrs = profile_neighbors(&profile, &self.dsel_profiles, self.params.kp, None)
            .expect("dsel size validated at construction");
        (0..self.pool.len())
            .map(|i| {
                let clf = self.pool.get(i);
                let f1 = extract_f1(clf, &region, &self.dsel);
                let f2 = extract_f2(clf, &region, &self.dsel);
                let f3 = extract_f3(&f1);
                let f4 = extract_f4(i, &nbrs, &self.dsel_profiles);
                let f5 = self.f5.apply(i, clf.decision_distance(x));
                assemble(&f1, &f2, f3, &f4, f5)
            })
            .collect()
    }

    /// Select the competent members for `x` and majority-vote their labels.
    /// When the selector rejects everyone, the single highest-confidence
    /// member stands in.
    pub fn classify(&self, x: &[f64]) -> Decision {
        let vectors = self.meta_vectors(x);
        let mut selected = Vec::new();
        let mut best = 0usize;
        let mut best_conf = f64::NEG_INFINITY;
        for (i, v) in vectors.iter().enumerate() {
            let (competent, conf) = self.selector.is_competent(v);
            if competent {
                selected.push(i);
            }
            if conf > best_conf {
                best_conf = conf;
                best = i;
            }
        }
        let fallback = selected.is_empty();
        if fallback {
            selected.push(best);
        }
        let vote = majority_vote(&self.pool, &selected, x);
        Decision {
            label: vote.label,
            selected,
            fallback,
            votes: vote.counts,
        }
    }

    pub fn evaluate(&self, test: &Dataset) -> Evaluation {
        assert!(test.n_samples() > 0, "empty test set");
        let records: Vec<QueryRecord> = (0..test.n_samples())
            .into_par_iter()
            .map(|i| {
                let decision = self.classify(test.row(i));
                QueryRecord {
                    query_index: i,
                    selected_size: decision.selected.len(),
                    predicted: decision.label,
                    truth: test.label(i),
                }
            })
            .collect();
        let correct = records.iter().filter(|r| r.predicted == r.truth).count();
        Evaluation {
            accuracy: correct as f64 / records.len() as f64,
            records,
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let bundle = ModelBundle {
            pool: self.pool.clone(),
            selector: self.selector.clone(),
            f5: self.f5.clone(),
            params: self.params,
            dsel_fingerprint: self.dsel.fingerprint(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &bundle)?;
        Ok(())
    }

    /// Load a saved model and rebind it to its selection dataset. The dataset
    /// is referenced by fingerprint in the file, so passing a different one
    /// is rejected.
    pub fn load_json(path: impl AsRef<Path>, dsel: Dataset) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let bundle: ModelBundle = serde_json::from_reader(std::io::BufReader::new(file))?;
        if bundle.dsel_fingerprint != dsel.fingerprint() {
            return Err(Error::ModelHashMismatch);
        }
        Self::assemble(bundle.pool, bundle.selector, dsel, bundle.f5, bundle.params)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelBundle {
    pool: Pool,
    selector: MetaClassifier,
    f5: F5Normalizer,
    params: MetaDesParams,
    dsel_fingerprint: u64,
}
