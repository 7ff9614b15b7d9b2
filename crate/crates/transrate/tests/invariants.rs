//! Cross-module properties exercised through the public API only.

use transrate::coding::{self, ScoreConfig};
use transrate::linalg::{self, SidePolicy};
use transrate::metrics::{self, ScoreAccuracyPairs};
use transrate::synth::{self, BlobSpec};
use transrate::{ClassWeighting, FeatureMatrix, LabelVector};

fn blobs(n_per_class: usize, d: usize, classes: usize, seed: u64) -> (FeatureMatrix, LabelVector) {
    let spec = BlobSpec {
        means: synth::default_means(classes, d, 3.0, seed),
        std: 1.0,
        samples_per_class: n_per_class,
        seed,
    };
    synth::gen_blobs(&spec).expect("valid spec")
}

fn random_matrix(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    let data: Vec<f64> = (0..n * d).map(|k| synth::normal(seed, k as u64)).collect();
    FeatureMatrix::from_rows(data, n, d).unwrap()
}

/// The two Gram sides carry the same log-determinant, whichever is smaller.
#[test]
fn gram_sides_agree_in_logdet() {
    for (seed, n, d) in [(1u64, 20, 7), (2, 7, 20), (3, 16, 16), (4, 33, 5)] {
        let f = random_matrix(n, d, seed);
        let alpha = 1.0 / (n as f64 * 1e-3);
        let a = linalg::logdet_ipd(&linalg::gram(&f, SidePolicy::ForceFeature).unwrap(), alpha)
            .unwrap();
        let b = linalg::logdet_ipd(&linalg::gram(&f, SidePolicy::ForceSample).unwrap(), alpha)
            .unwrap();
        let scale = a.abs().max(1.0);
        assert!((a - b).abs() <= 1e-8 * scale, "seed {seed}: {a} vs {b}");
    }
}

/// Rotating the feature space by an orthogonal matrix leaves the score
/// unchanged: all Gram eigenvalues are preserved.
#[test]
fn transrate_is_rotation_invariant() {
    use nalgebra::DMatrix;
    let (f, y) = blobs(20, 8, 3, 42);
    let cfg = ScoreConfig::default();
    let base = coding::transrate(&f, &y, &cfg).unwrap().value;

    for seed in 0..5u64 {
        let raw = DMatrix::from_fn(8, 8, |i, j| synth::normal(900 + seed, (i * 8 + j) as u64));
        let q = raw.qr().q();
        let mut rotated = Vec::with_capacity(f.n() * f.d());
        for i in 0..f.n() {
            let row = f.row(i);
            for j in 0..8 {
                let mut acc = 0.0f64;
                for (k, &v) in row.iter().enumerate() {
                    acc += v * q[(k, j)];
                }
                rotated.push(acc);
            }
        }
        let fr = FeatureMatrix::from_rows(rotated, f.n(), f.d()).unwrap();
        let score = coding::transrate(&fr, &y, &cfg).unwrap().value;
        assert!(
            (score - base).abs() <= 1e-8 * base.abs().max(1.0),
            "seed {seed}: {score} vs {base}"
        );
    }
}

/// Duplicating every sample changes n but not the score: the 1/(n eps)
/// factor halves exactly as the Gram doubles.
#[test]
fn transrate_is_duplication_invariant() {
    let (f, y) = blobs(15, 6, 3, 7);
    let mut doubled = Vec::with_capacity(2 * f.n() * f.d());
    let mut ids2 = Vec::with_capacity(2 * f.n());
    let ids = y.class_ids().unwrap();
    for rep in 0..2 {
        let _ = rep;
        doubled.extend_from_slice(f.data());
        ids2.extend_from_slice(ids);
    }
    let f2 = FeatureMatrix::from_rows(doubled, 2 * f.n(), f.d()).unwrap();
    let y2 = LabelVector::classification_inferred(ids2).unwrap();
    let cfg = ScoreConfig::default();
    let a = coding::transrate(&f, &y, &cfg).unwrap().value;
    let b = coding::transrate(&f2, &y2, &cfg).unwrap().value;
    assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
}

/// Reordering samples (with their labels) does not change the score beyond
/// accumulation noise.
#[test]
fn transrate_is_sample_order_invariant() {
    let (f, y) = blobs(12, 5, 4, 19);
    let n = f.n();
    let perm: Vec<usize> = {
        // deterministic permutation from the counter stream
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let r = synth::counter_value(555, i as u64) as usize % (i + 1);
            idx.swap(i, r);
        }
        idx
    };
    let mut data = Vec::with_capacity(n * f.d());
    let mut ids = Vec::with_capacity(n);
    let src = y.class_ids().unwrap();
    for &i in &perm {
        data.extend_from_slice(f.row(i));
        ids.push(src[i]);
    }
    let fp = FeatureMatrix::from_rows(data, n, f.d()).unwrap();
    let yp = LabelVector::classification_inferred(ids).unwrap();
    let cfg = ScoreConfig::default();
    let a = coding::transrate(&f, &y, &cfg).unwrap().value;
    let b = coding::transrate(&fp, &yp, &cfg).unwrap().value;
    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
}

/// With unit normalization on, uniformly scaling all features is a no-op up
/// to rounding in the row norms.
#[test]
fn unit_norm_absorbs_global_scale() {
    let (f, y) = blobs(18, 6, 2, 3);
    let scaled: Vec<f64> = f.data().iter().map(|v| v * 37.5).collect();
    let fs = FeatureMatrix::from_rows(scaled, f.n(), f.d()).unwrap();
    let cfg = ScoreConfig::default();
    let a = coding::transrate(&f, &y, &cfg).unwrap().value;
    let b = coding::transrate(&fs, &y, &cfg).unwrap().value;
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
}

/// The packaged score equals the difference of its two published parts when
/// every optional transform is switched off.
#[test]
fn score_decomposes_into_rate_difference() {
    let (f, y) = blobs(25, 4, 3, 23);
    let cfg = ScoreConfig {
        eps: 1e-4,
        unit_norm: false,
        per_dim: false,
        class_weighting: ClassWeighting::Empirical,
        subtract_label_entropy: false,
        regression_bins: 10,
    };
    let packaged = coding::transrate(&f, &y, &cfg).unwrap().value;
    let rz = coding::coding_rate(&f, cfg.eps).unwrap();
    let rzy =
        coding::conditional_coding_rate(&f, &y, cfg.eps, ClassWeighting::Empirical).unwrap();
    assert_eq!(packaged, rz - rzy);
}

/// Generator separation sweep, scoring, ranking, and rank correlation all
/// compose: more separation means a better rank, perfectly correlated with
/// the level index.
#[test]
fn sweep_scores_rank_in_level_order() {
    let base = BlobSpec {
        means: synth::default_means(3, 6, 4.0, 77),
        std: 1.0,
        samples_per_class: 40,
        seed: 77,
    };
    let datasets = synth::separability_sweep(6, &base).unwrap();
    let cfg = ScoreConfig::default();
    let mut entries = Vec::new();
    for (level, (f, y)) in datasets.iter().enumerate() {
        let score = coding::transrate(f, y, &cfg).unwrap().value;
        entries.push((format!("level_{level}"), score, level as f64));
    }
    let pairs = ScoreAccuracyPairs::new(entries).unwrap();
    assert_eq!(metrics::kendall_tau(&pairs).unwrap(), 1.0);
    assert_eq!(metrics::weighted_tau(&pairs).unwrap(), 1.0);
}
