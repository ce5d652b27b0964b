//! Two-group Kruskal-Wallis rank test used for the pairwise significance
//! comparisons.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy)]
pub struct KwResult {
    /// Tie-corrected H statistic.
    pub h: f64,
    /// Chi-squared p-value with one degree of freedom.
    pub p: f64,
    /// p < 0.05
    pub significant: bool,
}

/// Two-sample Kruskal-Wallis test (equivalent to the Wilcoxon rank-sum test
/// for two groups) with the standard tie correction. Groups where every value
/// is identical yield H = 0 and p = 1.
pub fn kruskal_wallis(a: &[f64], b: &[f64]) -> anyhow::Result<KwResult> {
    anyhow::ensure!(
        a.len() >= 3 && b.len() >= 3,
        "each group needs at least 3 observations (got {} and {})",
        a.len(),
        b.len()
    );
    let n = a.len() + b.len();
    let mut combined: Vec<(f64, usize)> = a
        .iter()
        .map(|&v| (v, 0))
        .chain(b.iter().map(|&v| (v, 1)))
        .collect();

    anyhow::ensure!(
        combined.iter().all(|(v, _)| v.is_finite()),
        "observations must be finite"
    );
    combined.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    // average ranks over tie runs, accumulating the tie correction term
    let mut rank_sums = [0.0f64; 2];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && combined[j].0 == combined[i].0 {
            j += 1;
        }
        let run = (j - i) as f64;
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for item in &combined[i..j] {
            rank_sums[item.1] += avg_rank;
        }
        tie_term += run * run * run - run;
        i = j;
    }

    let nf = n as f64;
    let h_raw = 12.0 / (nf * (nf + 1.0))
        * (rank_sums[0] * rank_sums[0] / a.len() as f64
            + rank_sums[1] * rank_sums[1] / b.len() as f64)
        - 3.0 * (nf + 1.0);
    let correction = 1.0 - tie_term / (nf * nf * nf - nf);
    let h = if correction > 0.0 {
        (h_raw / correction).max(0.0)
    } else {
        0.0 // every observation identical
    };

    let chi = ChiSquared::new(1.0).expect("df 1 is valid");
    let p = (1.0 - chi.cdf(h)).clamp(0.0, 1.0);
    Ok(KwResult {
        h,
        p,
        significant: p < 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Slow oracle: ranks via pairwise counting (rank = #smaller + (#equal+1)/2),
    /// tie term via value grouping, straight from the textbook formula.
    fn brute_force(a: &[f64], b: &[f64]) -> f64 {
        let all: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = all.len() as f64;
        let rank_of = |v: f64| {
            let smaller = all.iter().filter(|&&u| u < v).count() as f64;
            let equal = all.iter().filter(|&&u| u == v).count() as f64;
            smaller + (equal + 1.0) / 2.0
        };
        let r1: f64 = a.iter().map(|&v| rank_of(v)).sum();
        let r2: f64 = b.iter().map(|&v| rank_of(v)).sum();
        let h = 12.0 / (n * (n + 1.0))
            * (r1 * r1 / a.len() as f64 + r2 * r2 / b.len() as f64)
            - 3.0 * (n + 1.0);
        let mut uniques: Vec<f64> = all.clone();
        uniques.sort_by(|x, y| x.partial_cmp(y).unwrap());
        uniques.dedup();
        let tie: f64 = uniques
            .iter()
            .map(|&u| {
                let t = all.iter().filter(|&&v| v == u).count() as f64;
                t * t * t - t
            })
            .sum();
        let c = 1.0 - tie / (n * n * n - n);
        if c > 0.0 {
            (h / c).max(0.0)
        } else {
            0.0
        }
    }

    #[test]
    fn identical_samples_are_insignificant() {
        let a = vec![0.8; 20];
        let b = vec![0.8; 20];
        let r = kruskal_wallis(&a, &b).unwrap();
        assert_eq!(r.h, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn fully_separated_groups() {
        // twenty 0.9s vs twenty 0.6s: corrected H equals N - 1 = 39
        let a = vec![0.9; 20];
        let b = vec![0.6; 20];
        let r = kruskal_wallis(&a, &b).unwrap();
        assert!((r.h - 39.0).abs() < 1e-9, "H = {}", r.h);
        assert!(r.p < 0.001);
        assert!(r.significant);
    }

    #[test]
    fn matches_brute_force_on_random_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for trial in 0..50 {
            let n1 = rng.gen_range(3..25);
            let n2 = rng.gen_range(3..25);
            // coarse grid so ties actually occur
            let a: Vec<f64> = (0..n1).map(|_| rng.gen_range(0..10) as f64 / 10.0).collect();
            let b: Vec<f64> = (0..n2).map(|_| rng.gen_range(0..10) as f64 / 10.0).collect();
            let fast = kruskal_wallis(&a, &b).unwrap();
            let slow = brute_force(&a, &b);
            assert!(
                (fast.h - slow).abs() < 1e-9,
                "trial {trial}: {} vs {slow}",
                fast.h
            );
        }
    }

    #[test]
    fn too_few_observations_rejected() {
        assert!(kruskal_wallis(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn p_value_in_range(
            a in proptest::collection::vec(0.0f64..1.0, 3..30),
            b in proptest::collection::vec(0.0f64..1.0, 3..30),
        ) {
            let r = kruskal_wallis(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p));
            prop_assert!(r.h >= 0.0);
        }
    }
}
