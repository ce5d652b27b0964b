//! Synthetic two-class 2-D generators used by the benchmark registry so the
//! test suite runs without any downloaded data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; rand_distr avoided to keep the sampled stream obvious and
    // stable across dependency bumps.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Two overlapping correlated Gaussians, one per class.
///
/// Class means sit 2.5 units apart along x with opposite-sign correlation, so
/// a single hyperplane leaves a visible error floor.
pub fn two_gaussians(n: usize, seed: u64) -> Dataset {
    assert!(n >= 4, "need at least 4 samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut features = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let (z1, z2) = (gauss(&mut rng), gauss(&mut rng));
        // correlated covariance via shear, mirrored between classes
        let (x, y) = if class == 0 {
            (z1, 0.6 * z1 + 1.2 * z2)
        } else {
            (2.5 + z1, -0.6 * z1 + 1.2 * z2)
        };
        features.extend_from_slice(&[x, y]);
        labels.push(class);
    }
    Dataset::new(
        "lithuanian",
        features,
        2,
        labels,
        vec!["0".into(), "1".into()],
    )
    .expect("generator invariants hold")
}

/// Two interleaved banana-shaped clusters (arcs with Gaussian noise).
pub fn banana(n: usize, seed: u64) -> Dataset {
    assert!(n >= 4, "need at least 4 samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x517cc1b727220a95);
    let radius = 5.0;
    let noise = 1.0;
    let mut features = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let (cx, cy) = if class == 0 {
            (radius * t.cos(), radius * t.sin())
        } else {
            (radius - radius * t.cos(), -radius * t.sin() + radius * 0.5)
        };
        features.extend_from_slice(&[
            cx + noise * gauss(&mut rng),
            cy + noise * gauss(&mut rng),
        ]);
        labels.push(class);
    }
    Dataset::new("banana", features, 2, labels, vec!["0".into(), "1".into()])
        .expect("generator invariants hold")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_deterministic_and_balanced() {
        for gen in [two_gaussians, banana] {
            let a = gen(200, 42);
            let b = gen(200, 42);
            assert_eq!(a.fingerprint(), b.fingerprint());
            assert_ne!(a.fingerprint(), gen(200, 43).fingerprint());
            let counts = a.class_counts();
            assert_eq!(counts, vec![100, 100]);
        }
    }
}
