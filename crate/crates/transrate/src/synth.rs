//! Deterministic synthetic data and independent ground-truth estimators,
//! used for validation: Gaussian blob generation, separability sweeps, and a
//! histogram plug-in mutual-information estimator for low dimensions.
//!
//! Randomness is counter-based: draw `k` of seed `s` is a pure function of
//! `(s, k)` (a splitmix-style finalizer over `s + (k+1)*GOLDEN`), so output
//! is identical across platforms, runs, and thread counts, and separate
//! counter ranges give independent streams without shared state.

use std::f64::consts::PI;

use thiserror::Error;

use crate::coding::LabelVector;
use crate::linalg::{self, FeatureMatrix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid blob spec: {0}")]
    BadSpec(&'static str),
    #[error("histogram estimator supports at most 3 dimensions, got {d}")]
    DimensionTooHigh { d: usize },
    #[error("need at least {needed} samples, got {n}")]
    TooFewSamples { n: usize, needed: usize },
    #[error("classification labels required")]
    RegressionLabels,
    #[error("label vector has {labels} entries but the matrix has {rows} rows")]
    LengthMismatch { labels: usize, rows: usize },
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

fn mix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Draw `k` of the counter stream for `seed`.
pub fn counter_value(seed: u64, k: u64) -> u64 {
    mix64(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Uniform in (0, 1], 53-bit resolution. Never zero, so it is safe under ln.
fn uniform01(seed: u64, k: u64) -> f64 {
    ((counter_value(seed, k) >> 11) + 1) as f64 / 9007199254740992.0
}

/// Standard normal draw `idx` of the stream: Box-Muller over the uniform
/// draws 2t and 2t+1, where t = idx/2; even idx takes the cosine branch.
pub fn normal(seed: u64, idx: u64) -> f64 {
    let t = idx / 2;
    let u1 = uniform01(seed, 2 * t);
    let u2 = uniform01(seed, 2 * t + 1);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * PI * u2;
    if idx % 2 == 0 {
        r * theta.cos()
    } else {
        r * theta.sin()
    }
}

/// Spec for isotropic Gaussian class blobs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    /// One mean vector per class; all must share a dimension.
    pub means: Vec<Vec<f64>>,
    pub std: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl BlobSpec {
    fn validated_shape(&self) -> Result<(usize, usize), SynthError> {
        let c = self.means.len();
        if c == 0 {
            return Err(SynthError::BadSpec("at least one class mean required"));
        }
        let d = self.means[0].len();
        if d == 0 {
            return Err(SynthError::BadSpec("mean vectors must be non-empty"));
        }
        if self.means.iter().any(|m| m.len() != d) {
            return Err(SynthError::BadSpec("mean vectors must share a dimension"));
        }
        if self
            .means
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(SynthError::BadSpec("mean vectors must be finite"));
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(SynthError::BadSpec("std must be positive and finite"));
        }
        if self.samples_per_class == 0 {
            return Err(SynthError::BadSpec("samples_per_class must be positive"));
        }
        Ok((c, d))
    }
}

/// Deterministic mean layout shared by the CLI presets and the test fixtures:
/// class c < d gets `separation * e_c`; later classes get `separation` times a
/// unit vector drawn from the seed's counter stream.
pub fn default_means(classes: usize, d: usize, separation: f64, seed: u64) -> Vec<Vec<f64>> {
    let dir_seed = mix64(seed ^ 0x6d65616e73); // "means"
    let mut means = Vec::with_capacity(classes);
    for c in 0..classes {
        if c < d {
            let mut m = vec![0.0; d];
            m[c] = separation;
            means.push(m);
        } else {
            let base = (c * d) as u64;
            let mut m: Vec<f64> = (0..d).map(|j| normal(dir_seed, base + j as u64)).collect();
            let norm = linalg::dot(&m, &m).sqrt();
            if norm > 0.0 {
                for v in m.iter_mut() {
                    *v *= separation / norm;
                }
            }
            means.push(m);
        }
    }
    means
}

/// Samples Gaussian blobs: `samples_per_class` draws around each class mean,
/// rows laid out class-major and then shuffled by a seeded Fisher-Yates
/// permutation. Counter ranges: draw (row, col) uses normal index row*d+col;
/// the shuffle consumes counters starting at 2*n*d.
pub fn gen_blobs(spec: &BlobSpec) -> Result<(FeatureMatrix, LabelVector), SynthError> {
    let (c, d) = spec.validated_shape()?;
    let m = spec.samples_per_class;
    let n = c * m;
    let mut data = vec![0.0f64; n * d];
    let mut ids = vec![0u32; n];
    for cls in 0..c {
        let mean = &spec.means[cls];
        for s in 0..m {
            let row = cls * m + s;
            ids[row] = cls as u32;
            for j in 0..d {
                let z = normal(spec.seed, (row * d + j) as u64);
                data[row * d + j] = mean[j] + spec.std * z;
            }
        }
    }
    let shuffle_base = 2 * (n as u64) * (d as u64);
    let mut counter = shuffle_base;
    for i in (1..n).rev() {
        let j = (counter_value(spec.seed, counter) % (i as u64 + 1)) as usize;
        counter += 1;
        for col in 0..d {
            data.swap(i * d + col, j * d + col);
        }
        ids.swap(i, j);
    }
    let f = FeatureMatrix::from_rows(data, n, d).expect("generated data is finite");
    let y = LabelVector::classification(ids, c as u32).expect("generated labels are valid");
    Ok((f, y))
}

/// `levels` datasets sharing every noise draw and the shuffle, with class
/// means pulled toward their centroid by factors 0, 1/(levels-1), ..., 1.
/// Level 0 is fully coincident; the last level is the base spec itself.
pub fn separability_sweep(
    levels: usize,
    base: &BlobSpec,
) -> Result<Vec<(FeatureMatrix, LabelVector)>, SynthError> {
    if levels < 3 {
        return Err(SynthError::BadSpec("separability sweep needs at least 3 levels"));
    }
    let (c, d) = base.validated_shape()?;
    let mut centroid = vec![0.0f64; d];
    for mean in &base.means {
        for (acc, v) in centroid.iter_mut().zip(mean) {
            *acc += v / c as f64;
        }
    }
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let t = level as f64 / (levels - 1) as f64;
        let means: Vec<Vec<f64>> = base
            .means
            .iter()
            .map(|mean| {
                mean.iter()
                    .zip(&centroid)
                    .map(|(v, ctr)| ctr + t * (v - ctr))
                    .collect()
            })
            .collect();
        let spec = BlobSpec { means, ..base.clone() };
        out.push(gen_blobs(&spec)?);
    }
    Ok(out)
}

/// Plug-in mutual information between binned features and class labels, in
/// nats: equal-width bins per dimension over [min, max] with the max edge
/// inclusive, MI = H(cells) - H(cells | class) from empirical frequencies.
pub fn histogram_mi(
    f: &FeatureMatrix,
    y: &LabelVector,
    bins_per_dim: u32,
) -> Result<f64, SynthError> {
    let d = f.d();
    if d > 3 {
        return Err(SynthError::DimensionTooHigh { d });
    }
    if bins_per_dim < 2 {
        return Err(SynthError::BadSpec("bins_per_dim must be at least 2"));
    }
    let ids = y.class_ids().ok_or(SynthError::RegressionLabels)?;
    if ids.len() != f.n() {
        return Err(SynthError::LengthMismatch { labels: ids.len(), rows: f.n() });
    }
    let c = y.num_classes().unwrap() as usize;
    let b = bins_per_dim as usize;
    let n = f.n();
    let needed = c * b;
    if n < needed {
        return Err(SynthError::TooFewSamples { n, needed });
    }
    let cells = b.checked_pow(d as u32).ok_or(SynthError::BadSpec("bin grid too large"))?;
    if cells.saturating_mul(c) > 1 << 26 {
        return Err(SynthError::BadSpec("bin grid too large"));
    }

    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..n {
        for (j, &v) in f.row(i).iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let mut joint = vec![0u64; cells * c];
    let mut cell_totals = vec![0u64; cells];
    let mut class_totals = vec![0u64; c];
    for i in 0..n {
        let mut cell = 0usize;
        let mut stride = 1usize;
        for (j, &v) in f.row(i).iter().enumerate() {
            let width = hi[j] - lo[j];
            let idx = if width > 0.0 {
                usize::min(b - 1, ((v - lo[j]) / width * b as f64) as usize)
            } else {
                0
            };
            cell += idx * stride;
            stride *= b;
        }
        let cls = ids[i] as usize;
        joint[cell * c + cls] += 1;
        cell_totals[cell] += 1;
        class_totals[cls] += 1;
    }

    let nf = n as f64;
    let cell_terms: Vec<f64> = cell_totals
        .iter()
        .filter(|&&cnt| cnt > 0)
        .map(|&cnt| {
            let p = cnt as f64 / nf;
            p * p.ln()
        })
        .collect();
    let h_cells = -linalg::fsum(&cell_terms);

    let mut cond_terms = Vec::with_capacity(c);
    for cls in 0..c {
        let nc = class_totals[cls];
        if nc == 0 {
            continue;
        }
        let ncf = nc as f64;
        let terms: Vec<f64> = (0..cells)
            .filter(|&cell| joint[cell * c + cls] > 0)
            .map(|cell| {
                let p = joint[cell * c + cls] as f64 / ncf;
                p * p.ln()
            })
            .collect();
        let h_c = -linalg::fsum(&terms);
        cond_terms.push((ncf / nf) * h_c);
    }
    let h_cells_given_class = linalg::fsum(&cond_terms);
    Ok(h_cells - h_cells_given_class)
}
