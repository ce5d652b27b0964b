//! The competence selector: a single-hidden-layer sigmoid MLP trained with
//! Levenberg-Marquardt and validation-based early stopping.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_features::MetaSample;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Dense `n_in -> n_hidden -> 1` network, sigmoid everywhere.
///
/// Weight vector layout: `[W1 row-major | b1 | w2 | b2]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub n_in: usize,
    pub n_hidden: usize,
    pub weights: Vec<f64>,
}

impl Network {
    pub fn n_weights(n_in: usize, n_hidden: usize) -> usize {
        n_hidden * (n_in + 1) + n_hidden + 1
    }

    /// Seeded init: uniform in [-0.5, 0.5] scaled by 1/sqrt(fan-in).
    pub fn init(n_in: usize, n_hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(Self::n_weights(n_in, n_hidden));
        let scale1 = 1.0 / (n_in as f64).sqrt();
        for _ in 0..n_hidden * n_in + n_hidden {
            weights.push(rng.gen_range(-0.5..0.5) * scale1);
        }
        let scale2 = 1.0 / (n_hidden as f64).sqrt();
        for _ in 0..n_hidden + 1 {
            weights.push(rng.gen_range(-0.5..0.5) * scale2);
        }
        Self {
            n_in,
            n_hidden,
            weights,
        }
    }

    pub fn zeroed(n_in: usize, n_hidden: usize) -> Self {
        Self {
            n_in,
            n_hidden,
            weights: vec![0.0; Self::n_weights(n_in, n_hidden)],
        }
    }

    #[inline]
    fn offsets(&self) -> (usize, usize, usize) {
        let w1_end = self.n_hidden * self.n_in;
        let b1_end = w1_end + self.n_hidden;
        let w2_end = b1_end + self.n_hidden;
        (w1_end, b1_end, w2_end)
    }

    fn hidden_into(&self, x: &[f64], hidden: &mut [f64]) {
        let (w1_end, _, _) = self.offsets();
        for h in 0..self.n_hidden {
            let row = &self.weights[h * self.n_in..(h + 1) * self.n_in];
            let mut z = self.weights[w1_end + h];
            for (w, v) in row.iter().zip(x) {
                z += w * v;
            }
            hidden[h] = sigmoid(z);
        }
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_in, "input dimension mismatch");
        let mut hidden = vec![0.0; self.n_hidden];
        self.forward_with_scratch(x, &mut hidden)
    }

    fn forward_with_scratch(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let (_, b1_end, w2_end) = self.offsets();
        self.hidden_into(x, hidden);
        let mut z2 = self.weights[w2_end];
        for (w, a) in self.weights[b1_end..w2_end].iter().zip(hidden.iter()) {
            z2 += w * a;
        }
        sigmoid(z2)
    }

    /// Analytic derivative of the output with respect to every weight.
    /// Fills `row` (length [`Network::n_weights`]) and returns the output.
    pub fn output_jacobian_row(&self, x: &[f64], row: &mut [f64]) -> f64 {
        assert_eq!(x.len(), self.n_in);
        assert_eq!(row.len(), self.weights.len());
        let (w1_end, b1_end, w2_end) = self.offsets();
        let mut hidden = vec![0.0; self.n_hidden];
        let y = self.forward_with_scratch(x, &mut hidden);
        let g2 = y * (1.0 - y);

        row[w2_end] = g2; // b2
        for h in 0..self.n_hidden {
            let a = hidden[h];
            row[b1_end + h] = g2 * a; // w2
            let delta = g2 * self.weights[b1_end + h] * a * (1.0 - a);
            row[w1_end + h] = delta; // b1
            let w1_row = &mut row[h * self.n_in..(h + 1) * self.n_in];
            for (slot, &v) in w1_row.iter_mut().zip(x) {
                *slot = delta * v;
            }
        }
        y
    }
}

/// One accepted optimizer step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_sse: f64,
    pub validation_mse: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStat>,
    pub stopped_by_patience: bool,
}

/// Levenberg-Marquardt settings. Defaults follow the usual damping schedule:
/// mu starts at 1e-3, /10 on accepted steps, x10 on rejections, giving up at
/// 1e10.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LmConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub mu_init: f64,
    pub mu_max: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            patience: 5,
            mu_init: 1e-3,
            mu_max: 1e10,
        }
    }
}

const ACCUMULATE_CHUNK: usize = 1024;

/// Gauss-Newton accumulation of JtJ (upper triangle), Jtr, and the SSE,
/// exact but chunked so memory stays bounded and partial sums are reduced in
/// a fixed order regardless of thread scheduling.
fn accumulate(
    net: &Network,
    inputs: &[f64],
    targets: &[f64],
) -> (Vec<f64>, Vec<f64>, f64) {
    let n_w = net.weights.len();
    let tri_len = n_w * (n_w + 1) / 2;
    let n = targets.len();
    let chunks: Vec<(usize, usize)> = (0..n)
        .step_by(ACCUMULATE_CHUNK)
        .map(|start| (start, (start + ACCUMULATE_CHUNK).min(n)))
        .collect();

    let partials: Vec<(Vec<f64>, Vec<f64>, f64)> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut tri = vec![0.0; tri_len];
            let mut jtr = vec![0.0; n_w];
            let mut sse = 0.0;
            let mut row = vec![0.0; n_w];
            for s in start..end {
                let x = &inputs[s * net.n_in..(s + 1) * net.n_in];
                let y = net.output_jacobian_row(x, &mut row);
                let r = y - targets[s];
                sse += r * r;
                let mut t = 0;
                for a in 0..n_w {
                    let ja = row[a];
                    if ja != 0.0 {
                        let base = t;
                        for (off, &jb) in row[a..].iter().enumerate() {
                            tri[base + off] += ja * jb;
                        }
                        jtr[a] += ja * r;
                    }
                    t += n_w - a;
                }
            }
            (tri, jtr, sse)
        })
        .collect();

    let mut tri = vec![0.0; tri_len];
    let mut jtr = vec![0.0; n_w];
    let mut sse = 0.0;
    for (t, g, s) in partials {
        for (acc, v) in tri.iter_mut().zip(t) {
            *acc += v;
        }
        for (acc, v) in jtr.iter_mut().zip(g) {
            *acc += v;
        }
        sse += s;
    }
    (tri, jtr, sse)
}

fn sse_of(net: &Network, inputs: &[f64], targets: &[f64]) -> f64 {
    let n = targets.len();
    let chunks: Vec<(usize, usize)> = (0..n)
        .step_by(ACCUMULATE_CHUNK)
        .map(|start| (start, (start + ACCUMULATE_CHUNK).min(n)))
        .collect();
    let partials: Vec<f64> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut scratch = vec![0.0; net.n_hidden];
            let mut sse = 0.0;
            for s in start..end {
                let x = &inputs[s * net.n_in..(s + 1) * net.n_in];
                let r = net.forward_with_scratch(x, &mut scratch) - targets[s];
                sse += r * r;
            }
            sse
        })
        .collect();
    partials.into_iter().sum()
}

fn solve_damped(tri: &[f64], jtr: &[f64], mu: f64, n_w: usize) -> Option<Vec<f64>> {
    let mut a = DMatrix::zeros(n_w, n_w);
    let mut t = 0;
    for i in 0..n_w {
        for j in i..n_w {
            let v = tri[t];
            a[(i, j)] = v;
            a[(j, i)] = v;
            t += 1;
        }
        a[(i, i)] += mu;
    }
    let rhs = nalgebra::DVector::from_iterator(n_w, jtr.iter().map(|&g| -g));
    let chol = a.cholesky()?;
    let delta = chol.solve(&rhs);
    if delta.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(delta.iter().cloned().collect())
}

/// Train `net` in place. `inputs` is row-major `n x n_in`; one epoch is one
/// accepted damped Gauss-Newton step. Early stopping watches the validation
/// MSE and restores the best-validation weights on exit.
pub fn train_levenberg_marquardt(
    net: &mut Network,
    inputs: &[f64],
    targets: &[f64],
    val_inputs: &[f64],
    val_targets: &[f64],
    cfg: LmConfig,
) -> TrainLog {
    assert!(!targets.is_empty() && !val_targets.is_empty());
    let n_w = net.weights.len();
    let mut mu = cfg.mu_init;
    let mut log = TrainLog::default();

    let mut best_weights = net.weights.clone();
    let mut best_val = val_mse(net, val_inputs, val_targets);
    let mut stale = 0usize;

    for epoch in 0..cfg.max_epochs {
        let (tri, jtr, sse) = accumulate(net, inputs, targets);

        // damping loop: reject and raise mu until the step reduces the SSE
        let mut accepted = false;
        while mu <= cfg.mu_max {
            let Some(delta) = solve_damped(&tri, &jtr, mu, n_w) else {
                mu *= 10.0;
                continue;
            };
            let mut candidate = net.clone();
            for (w, d) in candidate.weights.iter_mut().zip(&delta) {
                *w += d;
            }
            let new_sse = sse_of(&candidate, inputs, targets);
            if new_sse.is_finite() && new_sse < sse {
                *net = candidate;
                mu = (mu / 10.0).max(1e-20);
                let vm = val_mse(net, val_inputs, val_targets);
                log.epochs.push(EpochStat {
                    epoch,
                    train_sse: new_sse,
                    validation_mse: vm,
                    mu,
                });
                if vm < best_val {
                    best_val = vm;
                    best_weights.copy_from_slice(&net.weights);
                    stale = 0;
                } else {
                    stale += 1;
                }
                accepted = true;
                break;
            }
            mu *= 10.0;
        }

        if !accepted {
            break; // mu exhausted: no descent direction left
        }
        if stale >= cfg.patience {
            log.stopped_by_patience = true;
            break;
        }
    }

    net.weights.copy_from_slice(&best_weights);
    log
}

fn val_mse(net: &Network, inputs: &[f64], targets: &[f64]) -> f64 {
    sse_of(net, inputs, targets) / targets.len() as f64
}

/// The trained selector plus everything needed to reproduce its decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaClassifier {
    net: Network,
    pub training_log: TrainLog,
}

/// Training settings for the selector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetaTrainConfig {
    pub hidden: usize,
    pub validation_fraction: f64,
    pub lm: LmConfig,
    pub seed: u64,
}

impl Default for MetaTrainConfig {
    fn default() -> Self {
        Self {
            hidden: 10,
            validation_fraction: 0.25,
            lm: LmConfig::default(),
            seed: 0,
        }
    }
}

pub const MIN_META_SET: usize = 40;

impl MetaClassifier {
    pub fn input_dim(&self) -> usize {
        self.net.n_in
    }

    /// Raw selector output in (0,1).
    pub fn confidence(&self, features: &[f64]) -> f64 {
        self.net.forward(features)
    }

    /// Competent iff the output reaches 0.5; the raw output doubles as a
    /// ranking score for the empty-ensemble fallback.
    pub fn is_competent(&self, features: &[f64]) -> (bool, f64) {
        let c = self.confidence(features);
        (c >= 0.5, c)
    }

    /// All-zero selector: outputs exactly 0.5 everywhere, deeming every
    /// classifier competent. Reduces dynamic selection to plain majority
    /// voting, which is what the reduction checks rely on.
    pub fn always_competent(input_dim: usize) -> Self {
        Self {
            net: Network::zeroed(input_dim, 1),
            training_log: TrainLog::default(),
        }
    }

    pub fn from_network(net: Network) -> Self {
        Self {
            net,
            training_log: TrainLog::default(),
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }
}

/// Train the selector on a meta-example set: stratified 75/25 train/validation
/// split on the competence label, then Levenberg-Marquardt with early stop.
pub fn train_meta(samples: &[MetaSample], cfg: MetaTrainConfig) -> Result<MetaClassifier> {
    if samples.len() < MIN_META_SET {
        return Err(Error::MetaSetTooSmall(samples.len(), MIN_META_SET));
    }
    let n_in = samples[0].features.len();
    if samples.iter().any(|s| s.features.len() != n_in) {
        return Err(Error::DimensionMismatch {
            expected: n_in,
            got: samples.iter().map(|s| s.features.len()).max().unwrap(),
        });
    }
    let positives = samples.iter().filter(|s| s.competent).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::SingleClassMetaSet);
    }

    // stratified split on the label
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa076_1d64_78bd_642f);
    let mut by_class: [Vec<usize>; 2] = Default::default();
    for (i, s) in samples.iter().enumerate() {
        by_class[usize::from(s.competent)].push(i);
    }
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let n_val = (cfg.validation_fraction * members.len() as f64).floor() as usize;
        val_idx.extend_from_slice(&members[..n_val]);
        train_idx.extend_from_slice(&members[n_val..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    if val_idx.is_empty() {
        // tiny but legal sets: hold out one example per class
        val_idx = vec![train_idx.remove(0)];
    }

    let pack = |idx: &[usize]| {
        let mut xs = Vec::with_capacity(idx.len() * n_in);
        let mut ts = Vec::with_capacity(idx.len());
        for &i in idx {
            xs.extend_from_slice(&samples[i].features);
            ts.push(f64::from(u8::from(samples[i].competent)));
        }
        (xs, ts)
    };
    let (train_x, train_t) = pack(&train_idx);
    let (val_x, val_t) = pack(&val_idx);

    let mut net = Network::init(n_in, cfg.hidden, cfg.seed);
    let log = train_levenberg_marquardt(&mut net, &train_x, &train_t, &val_x, &val_t, cfg.lm);
    Ok(MetaClassifier {
        net,
        training_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn numeric_jacobian(net: &Network, x: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; net.weights.len()];
        for w in 0..net.weights.len() {
            let h = 1e-6 * net.weights[w].abs().max(1.0);
            let mut plus = net.clone();
            plus.weights[w] += h;
            let mut minus = net.clone();
            minus.weights[w] -= h;
            grad[w] = (plus.forward(x) - minus.forward(x)) / (2.0 * h);
        }
        grad
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let net = Network::init(5, 3, trial);
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut row = vec![0.0; net.weights.len()];
            net.output_jacobian_row(&x, &mut row);
            let numeric = numeric_jacobian(&net, &x);
            for (a, n) in row.iter().zip(&numeric) {
                let denom = a.abs().max(n.abs()).max(1e-6);
                assert!(
                    (a - n).abs() / denom < 1e-5,
                    "trial {trial}: analytic {a} vs numeric {n}"
                );
            }
        }
    }

    fn threshold_meta_set(n: usize, seed: u64) -> Vec<MetaSample> {
        // synthetic meta-problem where a threshold on the f3 slot suffices:
        // layout [f1(7) | f2(7) | f3 | f4(5) | f5], alpha = f3 > 0.5
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let f1: Vec<f64> = (0..7).map(|_| f64::from(rng.gen_bool(0.5))).collect();
                let f2: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
                let f3 = f1.iter().sum::<f64>() / 7.0;
                let f4: Vec<f64> = (0..5).map(|_| f64::from(rng.gen_bool(0.5))).collect();
                let f5 = rng.gen_range(0.0..1.0);
                let features = crate::meta_features::assemble(&f1, &f2, f3, &f4, f5);
                MetaSample {
                    features,
                    competent: f3 > 0.5,
                    classifier_index: i,
                    query_index: 0,
                }
            })
            .collect()
    }

    #[test]
    fn learns_a_separable_meta_problem() {
        let samples = threshold_meta_set(400, 5);
        let model = train_meta(&samples, MetaTrainConfig::default()).unwrap();
        // validation-style check on a fresh draw
        let fresh = threshold_meta_set(200, 99);
        let correct = fresh
            .iter()
            .filter(|s| model.is_competent(&s.features).0 == s.competent)
            .count();
        assert!(
            correct as f64 / fresh.len() as f64 >= 0.95,
            "accuracy {}",
            correct as f64 / fresh.len() as f64
        );
    }

    #[test]
    fn accepted_steps_never_increase_training_sse() {
        let samples = threshold_meta_set(300, 8);
        let model = train_meta(&samples, MetaTrainConfig::default()).unwrap();
        let log = &model.training_log;
        assert!(!log.epochs.is_empty());
        for pair in log.epochs.windows(2) {
            assert!(
                pair[1].train_sse <= pair[0].train_sse,
                "SSE rose between accepted steps: {pair:?}"
            );
        }
    }

    #[test]
    fn training_is_deterministic() {
        let samples = threshold_meta_set(200, 3);
        let cfg = MetaTrainConfig {
            seed: 21,
            ..Default::default()
        };
        let a = train_meta(&samples, cfg).unwrap();
        let b = train_meta(&samples, cfg).unwrap();
        assert_eq!(a.network().weights, b.network().weights);
    }

    #[test]
    fn constant_features_terminate() {
        let mut samples = threshold_meta_set(100, 4);
        for s in &mut samples {
            s.features = vec![0.5; 21];
        }
        // keep both classes present
        let model = train_meta(&samples, MetaTrainConfig::default()).unwrap();
        let out = model.confidence(&vec![0.5; 21]);
        let base_rate =
            samples.iter().filter(|s| s.competent).count() as f64 / samples.len() as f64;
        assert!((out - base_rate).abs() < 0.25, "out {out} vs rate {base_rate}");
    }

    #[test]
    fn competence_threshold_rule() {
        let stub = MetaClassifier::always_competent(21);
        let (competent, conf) = stub.is_competent(&vec![0.3; 21]);
        assert!(competent, "output exactly 0.5 counts as competent");
        assert_eq!(conf, 0.5);
    }

    #[test]
    fn rejects_degenerate_meta_sets() {
        let mut samples = threshold_meta_set(100, 6);
        assert!(matches!(
            train_meta(&samples[..10], MetaTrainConfig::default()),
            Err(Error::MetaSetTooSmall(10, _))
        ));
        for s in &mut samples {
            s.competent = true;
        }
        assert!(matches!(
            train_meta(&samples, MetaTrainConfig::default()),
            Err(Error::SingleClassMetaSet)
        ));
    }
}
