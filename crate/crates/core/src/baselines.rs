//! Literature DES comparators and the static baselines. Every technique
//! consumes the same pool and selection dataset as the meta-learning model so
//! per-replication comparisons stay paired.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linear::accuracy;
use crate::pool::{majority_vote, Pool};
use crate::region::{knn_region, profile_neighbors, Neighborhood, ProfileTable};

/// Result of one per-query selection: the chosen members and their vote.
#[derive(Debug, Clone)]
pub struct Selection {
    pub members: Vec<usize>,
    pub label: usize,
}

fn region_accuracy(pool: &Pool, i: usize, region: &[usize], dsel: &Dataset) -> f64 {
    let clf = pool.get(i);
    let correct = region
        .iter()
        .filter(|&&j| clf.predict(dsel.row(j)) == dsel.label(j))
        .count();
    correct as f64 / region.len() as f64
}

fn full_pool(pool: &Pool) -> Vec<usize> {
    (0..pool.len()).collect()
}

/// KNORA-Eliminate: keep the classifiers with perfect accuracy over the
/// region; if none exist, shrink the region one neighbor at a time, and with
/// nothing left fall back to the whole pool.
pub fn knora_e(pool: &Pool, dsel: &Dataset, x: &[f64], k: usize) -> Result<Selection> {
    let region = knn_region(x, dsel, k, None)?;
    for k_now in (1..=k).rev() {
        let prefix = &region.indices[..k_now];
        let perfect: Vec<usize> = (0..pool.len())
            .filter(|&i| region_accuracy(pool, i, prefix, dsel) == 1.0)
            .collect();
        if !perfect.is_empty() {
            let label = majority_vote(pool, &perfect, x).label;
            return Ok(Selection {
                members: perfect,
                label,
            });
        }
    }
    let members = full_pool(pool);
    let label = majority_vote(pool, &members, x).label;
    Ok(Selection { members, label })
}

/// KNORA-Union: each classifier casts one vote per correctly labeled
/// neighbor; the class with the largest weighted tally wins. If nobody is
/// ever correct the plain pool majority decides.
pub fn knora_u(pool: &Pool, dsel: &Dataset, x: &[f64], k: usize) -> Result<Selection> {
    let region = knn_region(x, dsel, k, None)?;
    let mut tally = vec![0usize; pool.n_classes()];
    let mut members = Vec::new();
    for i in 0..pool.len() {
        let clf = pool.get(i);
        let votes = region
            .indices
            .iter()
            .filter(|&&j| clf.predict(dsel.row(j)) == dsel.label(j))
            .count();
        if votes > 0 {
            tally[clf.predict(x)] += votes;
            members.push(i);
        }
    }
    if members.is_empty() {
        let members = full_pool(pool);
        let label = majority_vote(pool, &members, x).label;
        return Ok(Selection { members, label });
    }
    let top = *tally.iter().max().unwrap();
    let label = tally.iter().position(|&t| t == top).unwrap();
    Ok(Selection { members, label })
}

fn argmax_competence(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Overall Local Accuracy: the single classifier most accurate over the
/// region, ties to the lower index.
pub fn ola(pool: &Pool, dsel: &Dataset, x: &[f64], k: usize) -> Result<Selection> {
    let region = knn_region(x, dsel, k, None)?;
    let scores: Vec<f64> = (0..pool.len())
        .map(|i| region_accuracy(pool, i, &region.indices, dsel))
        .collect();
    let winner = argmax_competence(&scores);
    Ok(Selection {
        members: vec![winner],
        label: pool.get(winner).predict(x),
    })
}

/// Local Class Accuracy: competence of a classifier is its precision over the
/// neighbors that carry the class it predicts for the query.
pub fn lca(pool: &Pool, dsel: &Dataset, x: &[f64], k: usize) -> Result<Selection> {
    let region = knn_region(x, dsel, k, None)?;
    let scores: Vec<f64> = (0..pool.len())
        .map(|i| lca_competence(pool, i, &region, dsel, x, None))
        .collect();
    let winner = argmax_competence(&scores);
    Ok(Selection {
        members: vec![winner],
        label: pool.get(winner).predict(x),
    })
}

/// Modified Local Accuracy: LCA with every neighbor weighted by the inverse
/// of its distance to the query.
pub fn mla(pool: &Pool, dsel: &Dataset, x: &[f64], k: usize) -> Result<Selection> {
    let region = knn_region(x, dsel, k, None)?;
    let scores: Vec<f64> = (0..pool.len())
        .map(|i| lca_competence(pool, i, &region, dsel, x, Some(MLA_EPSILON)))
        .collect();
    let winner = argmax_competence(&scores);
    Ok(Selection {
        members: vec![winner],
        label: pool.get(winner).predict(x),
    })
}

const MLA_EPSILON: f64 = 1e-9;

fn lca_competence(
    pool: &Pool,
    i: usize,
    region: &Neighborhood,
    dsel: &Dataset,
    x: &[f64],
    inverse_distance: Option<f64>,
) -> f64 {
    let clf = pool.get(i);
    let predicted = clf.predict(x);
    let mut num = 0.0;
    let mut denom = 0.0;
    for (pos, &j) in region.indices.iter().enumerate() {
        if dsel.label(j) != predicted {
            continue;
        }
        let w = match inverse_distance {
            Some(eps) => 1.0 / (region.distances[pos] + eps),
            None => 1.0,
        };
        denom += w;
        if clf.predict(dsel.row(j)) == predicted {
            num += w;
        }
    }
    if denom == 0.0 {
        0.0
    } else {
        num / denom
    }
}

/// Behaviour-similarity filter parameters for MCB.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McbParams {
    /// Minimum profile agreement fraction for a neighbor to stay in the
    /// region.
    pub similarity: f64,
    /// Local accuracy a classifier must exceed to be selected.
    pub threshold: f64,
}

impl Default for McbParams {
    fn default() -> Self {
        Self {
            similarity: 0.7,
            threshold: 0.6,
        }
    }
}

/// Multiple Classifier Behaviour: restrict the region to neighbors whose
/// output profile agrees with the query's, then select the classifiers whose
/// accuracy over the filtered region exceeds the threshold. Falls back to the
/// OLA winner when the filter or the threshold leaves nothing.
pub fn mcb(
    pool: &Pool,
    dsel: &Dataset,
    table: &ProfileTable,
    x: &[f64],
    k: usize,
    params: McbParams,
) -> Result<Selection> {
    let region = knn_region(x, dsel, k, None)?;
    let profile = pool.predict_all(x);
    let filtered: Vec<usize> = region
        .indices
        .iter()
        .copied()
        .filter(|&j| {
            let agree = profile
                .iter()
                .zip(table.row(j))
                .filter(|(a, b)| a == b)
                .count();
            agree as f64 / profile.len() as f64 >= params.similarity
        })
        .collect();

    if !filtered.is_empty() {
        let members: Vec<usize> = (0..pool.len())
            .filter(|&i| region_accuracy(pool, i, &filtered, dsel) > params.threshold)
            .collect();
        if !members.is_empty() {
            let label = majority_vote(pool, &members, x).label;
            return Ok(Selection { members, label });
        }
    }
    ola(pool, dsel, x, k)
}

/// K-Nearest Output Profiles: like KNORA-E but in decision space — keep the
/// classifiers with perfect recorded accuracy on the profile-neighborhood
/// source samples, shrinking the neighborhood on failure.
pub fn knop(pool: &Pool, table: &ProfileTable, x: &[f64], kp: usize) -> Result<Selection> {
    let profile = pool.predict_all(x);
    let nbrs = profile_neighbors(&profile, table, kp, None)?;
    for kp_now in (1..=kp).rev() {
        let prefix = &nbrs.indices[..kp_now];
        let perfect: Vec<usize> = (0..pool.len())
            .filter(|&i| {
                prefix
                    .iter()
                    .all(|&j| table.entry(j, i) == table.true_label(j))
            })
            .collect();
        if !perfect.is_empty() {
            let label = majority_vote(pool, &perfect, x).label;
            return Ok(Selection {
                members: perfect,
                label,
            });
        }
    }
    let members = full_pool(pool);
    let label = majority_vote(pool, &members, x).label;
    Ok(Selection { members, label })
}

/// Static choices fitted once per replication on the validation partition.
#[derive(Debug, Clone)]
pub struct StaticBaselines {
    /// Index of the classifier with the highest validation accuracy.
    pub single_best: usize,
    /// Greedily selected half of the pool minimizing the majority-vote error.
    pub selected: Vec<usize>,
}

/// Fit the single-best and static-selection baselines on `validation`.
///
/// Static selection grows the ensemble greedily, at each step adding the
/// classifier that minimizes the ensemble's majority-vote error, until half
/// of the pool is selected. Vote ties during the search use the same summed
/// posterior rule as the shared combiner.
pub fn fit_static(pool: &Pool, validation: &Dataset) -> StaticBaselines {
    let m = pool.len();
    let n = validation.n_samples();
    let l = pool.n_classes();

    let mut best = 0;
    let mut best_acc = f64::NEG_INFINITY;
    for i in 0..m {
        let acc = accuracy(pool.get(i), validation);
        if acc > best_acc {
            best_acc = acc;
            best = i;
        }
    }

    // precompute member decisions and posteriors over the validation set
    let preds: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|s| pool.get(i).predict(validation.row(s)))
                .collect()
        })
        .collect();
    let posts: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut flat = Vec::with_capacity(n * l);
            for s in 0..n {
                flat.extend(pool.get(i).posterior(validation.row(s)));
            }
            flat
        })
        .collect();

    let target = (m / 2).max(1);
    let mut selected: Vec<usize> = Vec::with_capacity(target);
    let mut counts = vec![0usize; n * l];
    let mut sums = vec![0.0f64; n * l];

    while selected.len() < target {
        let mut best_cand = usize::MAX;
        let mut best_err = usize::MAX;
        for cand in 0..m {
            if selected.contains(&cand) {
                continue;
            }
            let mut errors = 0;
            for s in 0..n {
                let row_counts = &counts[s * l..(s + 1) * l];
                let row_sums = &sums[s * l..(s + 1) * l];
                let cand_vote = preds[cand][s];
                let winner = vote_with_candidate(
                    row_counts,
                    row_sums,
                    cand_vote,
                    &posts[cand][s * l..(s + 1) * l],
                );
                if winner != validation.label(s) {
                    errors += 1;
                }
            }
            if errors < best_err {
                best_err = errors;
                best_cand = cand;
            }
        }
        selected.push(best_cand);
        for s in 0..n {
            counts[s * l + preds[best_cand][s]] += 1;
            for c in 0..l {
                sums[s * l + c] += posts[best_cand][s * l + c];
            }
        }
    }
    selected.sort_unstable();

    StaticBaselines {
        single_best: best,
        selected,
    }
}

fn vote_with_candidate(
    counts: &[usize],
    sums: &[f64],
    cand_vote: usize,
    cand_post: &[f64],
) -> usize {
    let l = counts.len();
    let mut top = 0usize;
    let mut top_count = 0usize;
    for c in 0..l {
        let count = counts[c] + usize::from(c == cand_vote);
        if count > top_count {
            top_count = count;
            top = c;
        }
    }
    // collect ties and resolve by summed posterior, lowest index last resort
    let mut winner = top;
    let mut winner_sum = f64::NEG_INFINITY;
    for c in 0..l {
        let count = counts[c] + usize::from(c == cand_vote);
        if count == top_count {
            let sum = sums[c] + cand_post[c];
            if sum > winner_sum {
                winner_sum = sum;
                winner = c;
            }
        }
    }
    winner
}

/// Idealized selection upper bound: a sample counts as correct when any pool
/// member labels it correctly.
pub fn oracle_accuracy(pool: &Pool, test: &Dataset) -> f64 {
    let covered = (0..test.n_samples())
        .filter(|&s| {
            (0..pool.len()).any(|i| pool.get(i).predict(test.row(s)) == test.label(s))
        })
        .count();
    covered as f64 / test.n_samples() as f64
}

/// Every evaluation technique addressable from the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Technique {
    MetaDes,
    KnoraE,
    KnoraU,
    Ola,
    Lca,
    Mla,
    Mcb,
    Knop,
    SingleBest,
    Bagging,
    StaticSelection,
    AdaBoost,
    Oracle,
}

impl Technique {
    pub const ALL: [Technique; 13] = [
        Technique::MetaDes,
        Technique::KnoraE,
        Technique::KnoraU,
        Technique::Ola,
        Technique::Lca,
        Technique::Mla,
        Technique::Mcb,
        Technique::Knop,
        Technique::SingleBest,
        Technique::Bagging,
        Technique::StaticSelection,
        Technique::AdaBoost,
        Technique::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Technique::MetaDes => "meta-des",
            Technique::KnoraE => "knora-e",
            Technique::KnoraU => "knora-u",
            Technique::Ola => "ola",
            Technique::Lca => "lca",
            Technique::Mla => "mla",
            Technique::Mcb => "mcb",
            Technique::Knop => "knop",
            Technique::SingleBest => "single-best",
            Technique::Bagging => "bagging",
            Technique::StaticSelection => "static-selection",
            Technique::AdaBoost => "adaboost",
            Technique::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .iter()
            .find(|t| t.name() == s)
            .copied()
            .ok_or_else(|| Error::UnknownTechnique(s.to_string()))
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::LinearClassifier;
    use crate::meta_features::extract_f1;
    use crate::pool::bagging_generate;
    use crate::region::build_profiles;
    use crate::synth::two_gaussians;
    use crate::{stratified_split, PerceptronConfig, SplitSpec};

    fn constant(class: usize, d: usize, l: usize) -> LinearClassifier {
        let mut w = vec![0.0; l * (d + 1)];
        w[class * (d + 1) + d] = 1.0;
        LinearClassifier::from_weights(w, d, l)
    }

    /// 1-D threshold classifier: predicts 1 iff x > t.
    fn threshold(t: f64) -> LinearClassifier {
        LinearClassifier::from_weights(vec![-1.0, t, 1.0, -t], 1, 2)
    }

    fn line(values: &[f64], labels: &[usize]) -> Dataset {
        Dataset::new(
            "line",
            values.to_vec(),
            1,
            labels.to_vec(),
            vec!["0".into(), "1".into()],
        )
        .unwrap()
    }

    fn realistic() -> (Pool, Dataset, Dataset) {
        let ds = two_gaussians(400, 31);
        let splits = stratified_split(&ds, &SplitSpec::with_seed(31)).unwrap();
        let pool = bagging_generate(&splits.train, 15, 31, PerceptronConfig::default()).unwrap();
        (pool, splits.dsel, splits.test)
    }

    #[test]
    fn knora_e_selects_the_perfect_member() {
        // labels flip at 3.5; threshold(3.5) is perfect, the constants are not
        let dsel = line(
            &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            &[0, 0, 0, 0, 1, 1, 1],
        );
        let pool = Pool::new(vec![constant(0, 1, 2), threshold(3.5), constant(1, 1, 2)]);
        let sel = knora_e(&pool, &dsel, &[3.2], 7).unwrap();
        assert_eq!(sel.members, vec![1]);
        assert_eq!(sel.label, 0);
    }

    #[test]
    fn knora_e_full_pool_fallback() {
        // every member is wrong on the nearest neighbor, so no region size
        // ever yields a perfect classifier
        let dsel = line(&[0.0, 0.1, 0.2, 0.3], &[0, 1, 0, 1]);
        let pool = Pool::new(vec![constant(1, 1, 2), constant(1, 1, 2)]);
        let sel = knora_e(&pool, &dsel, &[0.01], 4).unwrap();
        assert_eq!(sel.members, vec![0, 1]);
    }

    #[test]
    fn knora_e_audit_selected_members_are_perfect() {
        let (pool, dsel, test) = realistic();
        for s in 0..test.n_samples().min(60) {
            let x = test.row(s);
            let sel = knora_e(&pool, &dsel, x, 7).unwrap();
            if sel.members.len() == pool.len() {
                continue; // fallback case
            }
            // find the final region size the way the implementation did and
            // recount accuracy with the independent f1 extractor
            let full = knn_region(x, &dsel, 7, None).unwrap();
            let k_used = (1..=7)
                .rev()
                .find(|&kk| {
                    let prefix = Neighborhood {
                        indices: full.indices[..kk].to_vec(),
                        distances: full.distances[..kk].to_vec(),
                    };
                    (0..pool.len()).any(|i| {
                        extract_f1(pool.get(i), &prefix, &dsel).iter().sum::<f64>() == kk as f64
                    })
                })
                .unwrap();
            let prefix = Neighborhood {
                indices: full.indices[..k_used].to_vec(),
                distances: full.distances[..k_used].to_vec(),
            };
            for &i in &sel.members {
                let f1 = extract_f1(pool.get(i), &prefix, &dsel);
                assert_eq!(
                    f1.iter().sum::<f64>(),
                    k_used as f64,
                    "member {i} not perfect at k={k_used}"
                );
            }
        }
    }

    #[test]
    fn knora_u_matches_brute_force_tally() {
        let (pool, dsel, test) = realistic();
        for s in 0..test.n_samples().min(40) {
            let x = test.row(s);
            let sel = knora_u(&pool, &dsel, x, 7).unwrap();
            // oracle: enumerate (classifier, neighbor) pairs
            let region = knn_region(x, &dsel, 7, None).unwrap();
            let mut tally = vec![0usize; pool.n_classes()];
            for i in 0..pool.len() {
                for &j in &region.indices {
                    if pool.get(i).predict(dsel.row(j)) == dsel.label(j) {
                        tally[pool.get(i).predict(x)] += 1;
                    }
                }
            }
            let top = *tally.iter().max().unwrap();
            let expected = tally.iter().position(|&t| t == top).unwrap();
            assert_eq!(sel.label, expected, "query {s}");
        }
    }

    #[test]
    fn knora_u_zero_votes_falls_back_to_majority() {
        // all-zero labels and constant-1 members: nobody is ever correct
        let dsel = line(&[0.0, 1.0, 2.0], &[0, 0, 0]);
        let wrong = Pool::new(vec![constant(1, 1, 2), constant(1, 1, 2)]);
        let sel = knora_u(&wrong, &dsel, &[1.0], 3).unwrap();
        assert_eq!(sel.members, vec![0, 1]);
        assert_eq!(sel.label, 1, "plain majority of the constant-1 pool");
    }

    #[test]
    fn ola_unique_perfect_and_ties() {
        let dsel = line(
            &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            &[0, 0, 0, 0, 1, 1, 1],
        );
        let pool = Pool::new(vec![constant(0, 1, 2), threshold(3.5), constant(0, 1, 2)]);
        let sel = ola(&pool, &dsel, &[3.0], 7).unwrap();
        assert_eq!(sel.members, vec![1], "unique perfect classifier wins");

        // two identical classifiers tie -> lower index
        let pool = Pool::new(vec![constant(0, 1, 2), constant(0, 1, 2)]);
        let sel = ola(&pool, &dsel, &[3.0], 7).unwrap();
        assert_eq!(sel.members, vec![0]);
    }

    #[test]
    fn ola_winner_matches_audit_recount() {
        let (pool, dsel, test) = realistic();
        for s in 0..test.n_samples().min(40) {
            let x = test.row(s);
            let sel = ola(&pool, &dsel, x, 7).unwrap();
            let region = knn_region(x, &dsel, 7, None).unwrap();
            let scores: Vec<f64> = (0..pool.len())
                .map(|i| {
                    extract_f1(pool.get(i), &region, &dsel).iter().sum::<f64>() / 7.0
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(scores[sel.members[0]], max);
            assert_eq!(
                sel.members[0],
                scores.iter().position(|&v| v == max).unwrap()
            );
        }
    }

    #[test]
    fn lca_hand_fixture() {
        // region: values 0..6, labels [0,0,1,1,1,0,1]
        let dsel = line(
            &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            &[0, 0, 1, 1, 1, 0, 1],
        );
        // threshold(1.5) predicts 1 for x>1.5: query 2.0 -> class 1.
        // neighbors of class 1: {2,3,4,6}; classifier labels them 1 except none
        // (all are > 1.5) -> 4/4 correct = competence 1.0
        let clf = threshold(1.5);
        let pool = Pool::new(vec![clf, constant(0, 1, 2)]);
        let sel = lca(&pool, &dsel, &[2.0], 7).unwrap();
        assert_eq!(sel.members, vec![0]);
        assert_eq!(sel.label, 1);

        // constant(0) predicts 0; class-0 neighbors {0,1,5} are all labeled 0
        // by it -> competence 1.0 as well; verify the hand ratio directly
        let region = knn_region(&[2.0], &dsel, 7, None).unwrap();
        let c = lca_competence(&pool, 1, &region, &dsel, &[2.0], None);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn lca_no_matching_neighbors_scores_zero() {
        let dsel = line(&[0.0, 1.0, 2.0], &[0, 0, 0]);
        let pool = Pool::new(vec![constant(1, 1, 2), constant(0, 1, 2)]);
        let region = knn_region(&[1.0], &dsel, 3, None).unwrap();
        // classifier 0 predicts class 1; no neighbor carries class 1
        assert_eq!(lca_competence(&pool, 0, &region, &dsel, &[1.0], None), 0.0);
    }

    #[test]
    fn mla_matches_lca_on_equidistant_neighbors() {
        // neighbors on a circle around the query are equidistant, so the
        // distance weights cancel
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            let a = i as f64 * std::f64::consts::TAU / 8.0;
            values.extend_from_slice(&[a.cos(), a.sin()]);
            labels.push(i % 2);
        }
        let dsel = Dataset::new("circle", values, 2, labels, vec!["0".into(), "1".into()])
            .unwrap();
        let mut members = Vec::new();
        for t in [-0.5, 0.0, 0.5] {
            members.push(LinearClassifier::from_weights(
                vec![-1.0, 0.0, t, 1.0, 0.0, -t],
                2,
                2,
            ));
        }
        let pool = Pool::new(members);
        let q = [0.0, 0.0];
        let a = lca(&pool, &dsel, &q, 8).unwrap();
        let b = mla(&pool, &dsel, &q, 8).unwrap();
        assert_eq!(a.members, b.members);
    }

    #[test]
    fn mla_hand_arithmetic_and_zero_distance() {
        // three neighbors at distances 1, 2, 4 with the query's predicted
        // class; classifier correct on the first two only:
        // competence = (1/1 + 1/2) / (1/1 + 1/2 + 1/4) = 6/7
        let dsel = line(&[1.0, 2.0, 4.0], &[1, 1, 1]);
        let clf = threshold(2.5); // correct on 4.0 only... use labels to pin
        let pool = Pool::new(vec![clf, constant(1, 1, 2)]);
        let region = knn_region(&[0.0], &dsel, 3, None).unwrap();
        // member 1 (constant 1) is correct everywhere: competence 1
        assert!(
            (lca_competence(&pool, 1, &region, &dsel, &[0.0], Some(MLA_EPSILON)) - 1.0).abs()
                < 1e-9
        );
        // member 0 predicts 0 at the query; no class-0 neighbors -> 0
        assert_eq!(
            lca_competence(&pool, 0, &region, &dsel, &[0.0], Some(MLA_EPSILON)),
            0.0
        );

        // hand ratio with a classifier wrong only on the farthest neighbor
        let partially = threshold(3.0); // predicts 1 only for x > 3 -> wrong on 1.0, 2.0
        let pool = Pool::new(vec![partially, constant(1, 1, 2)]);
        // query at 5.0 -> predicted 1; distances to (4,2,1) are (1,3,4)
        let region = knn_region(&[5.0], &dsel, 3, None).unwrap();
        let c = lca_competence(&pool, 0, &region, &dsel, &[5.0], Some(MLA_EPSILON));
        let expected = (1.0 / 1.0) / (1.0 / 1.0 + 1.0 / 3.0 + 1.0 / 4.0);
        assert!((c - expected).abs() < 1e-6, "{c} vs {expected}");

        // a zero-distance neighbor dominates
        let region = knn_region(&[4.0], &dsel, 3, None).unwrap();
        assert_eq!(region.distances[0], 0.0);
        let c = lca_competence(&pool, 0, &region, &dsel, &[4.0], Some(MLA_EPSILON));
        assert!(c > 0.999999, "zero-distance correct neighbor dominates: {c}");
    }

    #[test]
    fn mcb_threshold_and_fallbacks() {
        let (pool, dsel, test) = realistic();
        let table = build_profiles(&dsel, &pool);
        let x = test.row(0);

        // threshold 0 admits everything that survives the similarity cut
        let all = mcb(
            &pool,
            &dsel,
            &table,
            x,
            7,
            McbParams {
                similarity: 0.0,
                threshold: -1.0,
            },
        )
        .unwrap();
        assert_eq!(all.members.len(), pool.len());

        // impossible threshold -> OLA fallback
        let fallback = mcb(
            &pool,
            &dsel,
            &table,
            x,
            7,
            McbParams {
                similarity: 0.0,
                threshold: 1.1,
            },
        )
        .unwrap();
        let ola_sel = ola(&pool, &dsel, x, 7).unwrap();
        assert_eq!(fallback.members, ola_sel.members);
        assert_eq!(fallback.label, ola_sel.label);
    }

    #[test]
    fn mcb_filtered_accuracy_matches_recount() {
        let (pool, dsel, test) = realistic();
        let table = build_profiles(&dsel, &pool);
        let params = McbParams::default();
        for s in 0..test.n_samples().min(40) {
            let x = test.row(s);
            let sel = mcb(&pool, &dsel, &table, x, 7, params).unwrap();
            // recompute the filtered region brute force
            let region = knn_region(&x.to_vec(), &dsel, 7, None).unwrap();
            let profile = pool.predict_all(x);
            let filtered: Vec<usize> = region
                .indices
                .iter()
                .copied()
                .filter(|&j| {
                    let agree = profile
                        .iter()
                        .zip(table.row(j))
                        .filter(|(a, b)| a == b)
                        .count();
                    agree as f64 / profile.len() as f64 >= params.similarity
                })
                .collect();
            if filtered.is_empty() || sel.members.len() == 1 {
                continue; // fallback path exercised elsewhere
            }
            for &i in &sel.members {
                let acc = region_accuracy(&pool, i, &filtered, &dsel);
                assert!(acc > params.threshold, "member {i} acc {acc}");
            }
        }
    }

    #[test]
    fn knop_selection_matches_brute_force_filter() {
        let (pool, dsel, test) = realistic();
        let table = build_profiles(&dsel, &pool);
        for s in 0..test.n_samples().min(40) {
            let x = test.row(s);
            let sel = knop(&pool, &table, x, 5).unwrap();
            if sel.members.len() == pool.len() {
                continue;
            }
            let profile = pool.predict_all(x);
            let nbrs = profile_neighbors(&profile, &table, 5, None).unwrap();
            let kp_used = (1..=5)
                .rev()
                .find(|&kk| {
                    (0..pool.len()).any(|i| {
                        nbrs.indices[..kk]
                            .iter()
                            .all(|&j| table.entry(j, i) == table.true_label(j))
                    })
                })
                .unwrap();
            let expected: Vec<usize> = (0..pool.len())
                .filter(|&i| {
                    nbrs.indices[..kp_used]
                        .iter()
                        .all(|&j| table.entry(j, i) == table.true_label(j))
                })
                .collect();
            assert_eq!(sel.members, expected);
        }
    }

    #[test]
    fn knop_full_pool_fallback() {
        let dsel = line(&[0.0, 1.0, 2.0], &[0, 0, 0]);
        let pool = Pool::new(vec![constant(1, 1, 2), constant(1, 1, 2)]);
        let table = build_profiles(&dsel, &pool);
        let sel = knop(&pool, &table, &[1.0], 3).unwrap();
        assert_eq!(sel.members, vec![0, 1]);
    }

    #[test]
    fn static_baselines_shape_and_agreement() {
        let (pool, dsel, test) = realistic();
        let fitted = fit_static(&pool, &dsel);
        assert_eq!(fitted.selected.len(), pool.len() / 2);
        assert!(fitted.single_best < pool.len());

        // single best never beats the oracle
        let single_acc = accuracy(pool.get(fitted.single_best), &test);
        assert!(single_acc <= oracle_accuracy(&pool, &test) + 1e-12);

        // identical members: every baseline agrees with any member
        let clone_pool = Pool::new(vec![pool.get(0).clone(); 4]);
        let fitted = fit_static(&clone_pool, &dsel);
        assert_eq!(fitted.single_best, 0);
        assert_eq!(fitted.selected.len(), 2);
        for s in 0..test.n_samples().min(10) {
            let x = test.row(s);
            let member = clone_pool.get(0).predict(x);
            assert_eq!(majority_vote(&clone_pool, &fitted.selected, x).label, member);
            assert_eq!(
                majority_vote(&clone_pool, &(0..4).collect::<Vec<_>>(), x).label,
                member
            );
        }
    }

    #[test]
    fn ola_with_whole_dsel_matches_single_best() {
        let (pool, dsel, test) = realistic();
        let fitted = fit_static(&pool, &dsel);
        let sel = ola(&pool, &dsel, test.row(0), dsel.n_samples()).unwrap();
        assert_eq!(sel.members[0], fitted.single_best);
    }

    #[test]
    fn oracle_matches_matrix_scan() {
        let (pool, _, test) = realistic();
        let acc = oracle_accuracy(&pool, &test);
        // oracle: full M x N prediction matrix
        let mut covered = 0;
        for s in 0..test.n_samples() {
            let mut hit = false;
            for i in 0..pool.len() {
                if pool.get(i).predict(test.row(s)) == test.label(s) {
                    hit = true;
                }
            }
            covered += usize::from(hit);
        }
        assert_eq!(acc, covered as f64 / test.n_samples() as f64);

        // degenerate cases
        let dsel = line(&[0.0, 1.0], &[0, 1]);
        let perfect = Pool::new(vec![threshold(0.5), constant(0, 1, 2)]);
        assert_eq!(oracle_accuracy(&perfect, &dsel), 1.0);
        let blind = Pool::new(vec![constant(1, 1, 2), constant(1, 1, 2)]);
        let zeros = line(&[0.0, 1.0], &[0, 0]);
        assert_eq!(oracle_accuracy(&blind, &zeros), 0.0);
    }

    #[test]
    fn technique_names_roundtrip() {
        for t in Technique::ALL {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert!("nope".parse::<Technique>().is_err());
    }
}
