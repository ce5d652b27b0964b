//! Dataset ingestion, stratified splitting, and min-max feature scaling.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled feature matrix with a dense class vocabulary.
///
/// Immutable after construction; splits and scalers produce new datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        d: usize,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if d == 0 || features.is_empty() {
            return Err(Error::Empty(name));
        }
        assert_eq!(features.len() % d, 0, "feature buffer not a multiple of d");
        let n = features.len() / d;
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if class_names.len() < 2 {
            return Err(Error::SingleClass);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Parse {
                row: labels.iter().position(|&l| l == bad).unwrap_or(0),
                msg: format!("label index {bad} out of range"),
            });
        }
        Ok(Self {
            name,
            features,
            n,
            d,
            labels,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of samples per class, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New dataset holding the given rows, in order. Class vocabulary is kept.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: name.into(),
            features,
            n: indices.len(),
            d: self.d,
            labels,
            class_names: self.class_names.clone(),
        }
    }

    /// Concatenate datasets sharing the same schema, in order.
    pub fn concat(parts: &[&Dataset], name: impl Into<String>) -> Result<Dataset> {
        assert!(!parts.is_empty());
        let d = parts[0].d;
        let class_names = parts[0].class_names.clone();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for p in parts {
            if p.d != d || p.class_names != class_names {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.d,
                });
            }
            features.extend_from_slice(&p.features);
            labels.extend_from_slice(&p.labels);
        }
        Dataset::new(name, features, d, labels, class_names)
    }

    /// Stable content fingerprint (FNV-1a over feature bytes and labels).
    pub fn fingerprint(&self) -> u64 {
        let mut h = fnv1a64_init();
        for v in &self.features {
            h = fnv1a64_update(h, &v.to_le_bytes());
        }
        for &l in &self.labels {
            h = fnv1a64_update(h, &(l as u64).to_le_bytes());
        }
        h
    }
}

pub(crate) fn fnv1a64_init() -> u64 {
    0xcbf29ce484222325
}

pub(crate) fn fnv1a64_update(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic 64-bit hash of the given byte strings (FNV-1a), used to
/// derive independent seeds and content fingerprints. Stable across runs and
/// platforms.
pub fn stable_hash64(parts: &[&[u8]]) -> u64 {
    let mut h = fnv1a64_init();
    for p in parts {
        h = fnv1a64_update(h, p);
        h = fnv1a64_update(h, &[0xff]);
    }
    h
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        // last column by convention; resolved at load time
        LabelColumn::Name("__last__".into())
    }
}

/// Load a CSV file into a [`Dataset`].
///
/// An optional header row is auto-detected: if any feature cell of the first
/// row fails to parse as a number, the row is treated as a header. Labels are
/// remapped to dense indices; the vocabulary is ordered numerically when all
/// labels parse as numbers, lexicographically otherwise. Missing values are
/// rejected.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        rows.push(rec?);
    }
    if rows.is_empty() {
        return Err(Error::Empty(path.display().to_string()));
    }

    let arity = rows[0].len();
    if arity < 2 {
        return Err(Error::Parse {
            row: 1,
            msg: "need at least one feature column and one label column".into(),
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != arity {
            return Err(Error::Parse {
                row: i + 1,
                msg: format!("expected {arity} columns, found {}", r.len()),
            });
        }
    }

    let header_names: Vec<String> = rows[0].iter().map(|c| c.trim().to_string()).collect();
    let label_idx = match label {
        LabelColumn::Index(i) => {
            if *i >= arity {
                return Err(Error::LabelColumn(i.to_string()));
            }
            *i
        }
        LabelColumn::Name(name) if name == "__last__" => arity - 1,
        LabelColumn::Name(name) => header_names
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::LabelColumn(name.clone()))?,
    };

    // Header detection: any non-numeric feature cell in the first row.
    let first_is_header = rows[0]
        .iter()
        .enumerate()
        .any(|(c, cell)| c != label_idx && cell.trim().parse::<f64>().is_err());
    let data_start = usize::from(first_is_header);
    if rows.len() == data_start {
        return Err(Error::Empty(path.display().to_string()));
    }

    let d = arity - 1;
    let mut features = Vec::with_capacity((rows.len() - data_start) * d);
    let mut raw_labels = Vec::with_capacity(rows.len() - data_start);
    for (i, rec) in rows.iter().enumerate().skip(data_start) {
        for (c, cell) in rec.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Error::Parse {
                    row: i + 1,
                    msg: format!("missing value in column {c}"),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: i + 1,
                msg: format!("non-numeric feature value {cell:?} in column {c}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: i + 1,
                    msg: format!("non-finite feature value in column {c}"),
                });
            }
            features.push(v);
        }
        raw_labels.push(rec[label_idx].trim().to_string());
    }

    // Dense label vocabulary, numerically ordered when possible.
    let mut unique: Vec<String> = BTreeMap::from_iter(raw_labels.iter().map(|l| (l.clone(), ())))
        .into_keys()
        .collect();
    let all_numeric = unique.iter().all(|l| l.parse::<f64>().is_ok());
    if all_numeric {
        unique.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .partial_cmp(&b.parse::<f64>().unwrap())
                .unwrap()
        });
    }
    if unique.len() < 2 {
        return Err(Error::SingleClass);
    }
    let index_of: BTreeMap<&str, usize> = unique
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|l| index_of[l.as_str()]).collect();

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Dataset::new(name, features, d, labels, unique)
}

/// Partition fractions and seed for one experimental replication.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction routed to classifier training (pool generation + meta-training).
    pub train: f64,
    /// Fraction for the dynamic selection dataset.
    pub dsel: f64,
    /// Fraction for the test set.
    pub test: f64,
    /// Fraction of the training partition routed to meta-training.
    pub meta_split: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.50,
            dsel: 0.25,
            test: 0.25,
            meta_split: 0.50,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum = self.train + self.dsel + self.test;
        if (sum - 1.0).abs() > 1e-9
            || self.train <= 0.0
            || self.dsel <= 0.0
            || self.test <= 0.0
            || !(0.0..1.0).contains(&self.meta_split)
        {
            return Err(Error::BadFractions(sum));
        }
        Ok(())
    }
}

/// The four disjoint partitions of one replication.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub meta_train: Dataset,
    pub dsel: Dataset,
    pub test: Dataset,
}

/// Stratified split into train / meta-train / dsel / test.
///
/// Per class, indices are shuffled (seeded) and sliced proportionally.
/// Rounding remainders go, one sample at a time, to the partition furthest
/// below its running size target, so both the partition sizes and the
/// per-class proportions stay within one sample of the exact fractions.
/// Every partition must end up with at least one sample of every class.
pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let fractions = [
        spec.train * (1.0 - spec.meta_split),
        spec.train * spec.meta_split,
        spec.dsel,
        spec.test,
    ];

    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for i in 0..ds.n_samples() {
        per_class[ds.label(i)].push(i);
    }
    for (class, members) in per_class.iter().enumerate() {
        if members.len() < 4 {
            return Err(Error::TooFewSamples {
                class,
                count: members.len(),
                needed: 4,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 4] = Default::default();
    let mut processed = 0usize;
    for (class, members) in per_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let n = members.len();
        processed += n;
        let mut counts: Vec<usize> = fractions
            .iter()
            .map(|f| (f * n as f64).floor() as usize)
            .collect();
        let mut assigned: usize = counts.iter().sum();
        while assigned < n {
            let neediest = (0..4)
                .max_by(|&a, &b| {
                    let da = fractions[a] * processed as f64 - (parts[a].len() + counts[a]) as f64;
                    let db = fractions[b] * processed as f64 - (parts[b].len() + counts[b]) as f64;
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            counts[neediest] += 1;
            assigned += 1;
        }

        let mut offset = 0;
        for (p, &c) in counts.iter().enumerate() {
            if c == 0 {
                return Err(Error::TooFewSamples {
                    class,
                    count: n,
                    needed: 4,
                });
            }
            parts[p].extend_from_slice(&members[offset..offset + c]);
            offset += c;
        }
    }
    // Restore within-partition sample order for reproducibility independent of
    // class iteration details.
    for p in &mut parts {
        p.sort_unstable();
    }

    let [a, b, c, d] = parts;
    Ok(Splits {
        train: ds.subset(&a, format!("{}-train", ds.name)),
        meta_train: ds.subset(&b, format!("{}-meta", ds.name)),
        dsel: ds.subset(&c, format!("{}-dsel", ds.name)),
        test: ds.subset(&d, format!("{}-test", ds.name)),
    })
}

/// Per-feature min-max scaler fitted on a training partition.
///
/// Transforms features to `[0,1]`; out-of-range values are clamped and
/// constant features map to 0.5.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinMaxScaler {
    bounds: Vec<(f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.n_features();
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for i in 0..ds.n_samples() {
            for (j, &v) in ds.row(i).iter().enumerate() {
                bounds[j].0 = bounds[j].0.min(v);
                bounds[j].1 = bounds[j].1.max(v);
            }
        }
        Self { bounds }
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bounds.len(),
                got: ds.n_features(),
            });
        }
        let d = ds.n_features();
        let mut features = Vec::with_capacity(ds.n_samples() * d);
        for i in 0..ds.n_samples() {
            for (j, &v) in ds.row(i).iter().enumerate() {
                features.push(scale_value(v, self.bounds[j]));
            }
        }
        Dataset::new(
            ds.name.clone(),
            features,
            d,
            ds.labels().to_vec(),
            ds.class_names().to_vec(),
        )
    }
}

pub(crate) fn scale_value(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo {
        0.5
    } else {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}
