//! Baseline transferability scorers used for comparison rankings: LEEP, NCE
//! (both over pseudo-labels from the source classifier head), H-score, LogME,
//! and label-feature correlation.
//!
//! All of them consume the feature matrix exactly as supplied; the
//! normalization switches in `ScoreConfig` apply to the coding-rate score
//! only. Every scorer is deterministic and invariant to class-id permutation
//! of the target labels: per-class contributions are combined with an
//! order-independent sum, so relabeled inputs give bit-identical scores.

use rayon::prelude::*;
use thiserror::Error;

use crate::coding::LabelVector;
use crate::linalg::{self, FeatureMatrix, LinalgError, SidePolicy};

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("pseudo-label matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("pseudo-label data length {len} does not fit shape {n}x{c}")]
    ShapeMismatch { len: usize, n: usize, c: usize },
    #[error("entry at row {row}, column {col} is not a probability in [0, 1]")]
    InvalidProbability { row: usize, col: usize },
    #[error("pseudo-label row {row} sums to {sum}, not 1")]
    NotRowStochastic { row: usize, sum: f64 },
    #[error("label vector has {labels} entries but the input has {rows} rows")]
    LengthMismatch { labels: usize, rows: usize },
    #[error("classification labels required")]
    ClassificationRequired,
    #[error("covariance is singular even after the ridge shift")]
    SingularCovariance,
    #[error("centered kernel is identically zero")]
    ZeroKernel,
    #[error("need at least 2 populated classes")]
    DegenerateLabels,
    #[error("every regression target was identically zero")]
    DegenerateTargets,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Softmax outputs of the source classifier head on the target samples:
/// an n x C_s row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelMatrix {
    probs: Vec<f64>,
    n: usize,
    c_s: usize,
}

impl PseudoLabelMatrix {
    /// Validates shape, entry range, and row sums (within 1e-6 of 1).
    pub fn new(probs: Vec<f64>, n: usize, c_s: usize) -> Result<Self, BaselineError> {
        if n == 0 || c_s == 0 {
            return Err(BaselineError::EmptyMatrix);
        }
        if probs.len() != n * c_s {
            return Err(BaselineError::ShapeMismatch { len: probs.len(), n, c: c_s });
        }
        for (pos, &v) in probs.iter().enumerate() {
            if !(v >= 0.0 && v <= 1.0) {
                return Err(BaselineError::InvalidProbability {
                    row: pos / c_s,
                    col: pos % c_s,
                });
            }
        }
        for row in 0..n {
            let sum = linalg::fsum(&probs[row * c_s..(row + 1) * c_s]);
            if (sum - 1.0).abs() > 1e-6 {
                return Err(BaselineError::NotRowStochastic { row, sum });
            }
        }
        Ok(PseudoLabelMatrix { probs, n, c_s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source_classes(&self) -> usize {
        self.c_s
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.c_s..(i + 1) * self.c_s]
    }
}

fn class_ids<'y>(y: &'y LabelVector, rows: usize) -> Result<(&'y [u32], usize), BaselineError> {
    let ids = y.class_ids().ok_or(BaselineError::ClassificationRequired)?;
    if ids.len() != rows {
        return Err(BaselineError::LengthMismatch { labels: ids.len(), rows });
    }
    let c = y.num_classes().unwrap() as usize;
    Ok((ids, c))
}

/// LEEP: the average log-likelihood of each target label under the empirical
/// conditional p(y | source class) weighted by the sample's pseudo-label.
/// Zero-mass source columns are dropped (they contribute nothing anyway).
/// At most 0 up to rounding; 0 exactly when pseudo-labels are one-hot and
/// perfectly aligned with the target labels.
pub fn leep_score(p: &PseudoLabelMatrix, y: &LabelVector) -> Result<f64, BaselineError> {
    let (ids, c) = class_ids(y, p.n)?;
    let cs = p.c_s;
    let mut mass = vec![0.0f64; cs];
    let mut joint = vec![0.0f64; c * cs];
    for i in 0..p.n {
        let row = p.row(i);
        let base = ids[i] as usize * cs;
        for s in 0..cs {
            mass[s] += row[s];
            joint[base + s] += row[s];
        }
    }
    let mut terms = Vec::with_capacity(p.n);
    for i in 0..p.n {
        let row = p.row(i);
        let cond = &joint[ids[i] as usize * cs..(ids[i] as usize + 1) * cs];
        let mut inner = 0.0f64;
        for s in 0..cs {
            if mass[s] > 0.0 {
                inner += cond[s] / mass[s] * row[s];
            }
        }
        terms.push(inner.ln());
    }
    Ok(linalg::fsum(&terms) / p.n as f64)
}

/// NCE over hardened pseudo-labels: -H(Y | argmax of each pseudo-label row),
/// argmax ties resolved to the lowest class index. At most 0; 0 exactly when
/// the hardened labels determine Y.
pub fn nce_score(p: &PseudoLabelMatrix, y: &LabelVector) -> Result<f64, BaselineError> {
    let (ids, c) = class_ids(y, p.n)?;
    let cs = p.c_s;
    let mut counts = vec![0u64; cs * c];
    let mut source_totals = vec![0u64; cs];
    for i in 0..p.n {
        let row = p.row(i);
        let mut best = 0usize;
        for s in 1..cs {
            if row[s] > row[best] {
                best = s;
            }
        }
        counts[best * c + ids[i] as usize] += 1;
        source_totals[best] += 1;
    }
    let nf = p.n as f64;
    let mut terms = Vec::new();
    for s in 0..cs {
        if source_totals[s] == 0 {
            continue;
        }
        let ns = source_totals[s] as f64;
        for cls in 0..c {
            let cnt = counts[s * c + cls];
            if cnt > 0 {
                let cf = cnt as f64;
                terms.push(cf / nf * (cf / ns).ln());
            }
        }
    }
    Ok(linalg::fsum(&terms))
}

fn column_means(f: &FeatureMatrix) -> Vec<f64> {
    let (n, d) = (f.n(), f.d());
    let mut mu = vec![0.0f64; d];
    for i in 0..n {
        for (m, &v) in mu.iter_mut().zip(f.row(i)) {
            *m += v;
        }
    }
    for m in mu.iter_mut() {
        *m /= n as f64;
    }
    mu
}

fn centered(f: &FeatureMatrix, mu: &[f64]) -> FeatureMatrix {
    let (n, d) = (f.n(), f.d());
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for (j, &v) in f.row(i).iter().enumerate() {
            data.push(v - mu[j]);
        }
    }
    FeatureMatrix::from_rows(data, n, d).expect("centering keeps entries finite")
}

/// Per-class means and counts; empty classes keep a zero mean and count 0.
fn class_means(f: &FeatureMatrix, ids: &[u32], c: usize) -> (Vec<f64>, Vec<usize>) {
    let d = f.d();
    let mut sums = vec![0.0f64; c * d];
    let mut counts = vec![0usize; c];
    for (i, &id) in ids.iter().enumerate() {
        let base = id as usize * d;
        for (j, &v) in f.row(i).iter().enumerate() {
            sums[base + j] += v;
        }
        counts[id as usize] += 1;
    }
    for cls in 0..c {
        if counts[cls] > 0 {
            for j in 0..d {
                sums[cls * d + j] /= counts[cls] as f64;
            }
        }
    }
    (sums, counts)
}

/// H-score: tr(cov(F)^-1 cov_between(F, Y)), with population covariances,
/// between-class means weighted by n_c/n, and a ridge of 1e-8 tr(cov)/d on
/// the pooled covariance diagonal.
pub fn hscore(f: &FeatureMatrix, y: &LabelVector) -> Result<f64, BaselineError> {
    let (ids, c) = class_ids(y, f.n())?;
    let (n, d) = (f.n(), f.d());
    let mu = column_means(f);
    let fc = centered(f, &mu);
    let g = linalg::gram(&fc, SidePolicy::ForceFeature)?;
    let mut cov = vec![0.0f64; d * d];
    for (dst, src) in cov.iter_mut().zip(g.data()) {
        *dst = src / n as f64;
    }
    let trace: f64 = (0..d).map(|j| cov[j * d + j]).sum();
    let ridge = 1e-8 * trace / d as f64;
    for j in 0..d {
        cov[j * d + j] += ridge;
    }
    if linalg::cholesky_in_place(&mut cov, d).is_err() {
        return Err(BaselineError::SingularCovariance);
    }

    let (means, counts) = class_means(f, ids, c);
    let mut between = vec![0.0f64; d * d];
    let mut buf = Vec::with_capacity(c);
    for j in 0..d {
        for k in 0..d {
            buf.clear();
            for cls in 0..c {
                if counts[cls] == 0 {
                    continue;
                }
                let w = counts[cls] as f64 / n as f64;
                buf.push(w * (means[cls * d + j] - mu[j]) * (means[cls * d + k] - mu[k]));
            }
            between[j * d + k] = linalg::fsum(&buf);
        }
    }

    let mut diag = Vec::with_capacity(d);
    let mut col = vec![0.0f64; d];
    for k in 0..d {
        for j in 0..d {
            col[j] = between[j * d + k];
        }
        linalg::cholesky_solve(&cov, d, &mut col);
        diag.push(col[k]);
    }
    Ok(linalg::fsum(&diag))
}

/// Log-evidence of one target vector under the Bayesian linear model, given
/// the eigendecomposition of F'F. Returns (evidence, converged).
fn logme_single_target(
    lambda: &[f64],
    p: &[f64],
    yty: f64,
    n: usize,
    d: usize,
) -> (f64, bool) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut alpha = 1.0f64;
    let mut beta = 1.0f64;
    let mut last = f64::NEG_INFINITY;
    for _ in 0..100 {
        let mut mtm = 0.0f64;
        let mut gamma = 0.0f64;
        let mut fit = 0.0f64;
        let mut quad = 0.0f64;
        let mut logdet = 0.0f64;
        for j in 0..d {
            let denom = alpha + beta * lambda[j];
            let m = beta * p[j] / denom;
            mtm += m * m;
            gamma += beta * lambda[j] / denom;
            fit += m * p[j];
            quad += lambda[j] * m * m;
            logdet += denom.ln();
        }
        let residual = (yty - 2.0 * fit + quad).max(1e-300);
        let evidence = 0.5
            * (d as f64 * alpha.ln() + n as f64 * beta.ln()
                - beta * residual
                - alpha * mtm
                - logdet
                - n as f64 * two_pi.ln());
        if (evidence - last).abs() < 1e-6 {
            return (evidence, true);
        }
        last = evidence;
        if mtm > 0.0 {
            let next = gamma / mtm;
            if next.is_finite() && next > 0.0 {
                alpha = next;
            }
        }
        let next = (n as f64 - gamma) / residual;
        if next.is_finite() && next > 0.0 {
            beta = next;
        }
    }
    (last, false)
}

/// LogME: mean per-sample log-evidence of a Bayesian linear head, maximized
/// by the (alpha, beta) fixed point on the spectrum of F'F. Classification
/// labels are expanded one-vs-rest (empty classes are skipped); regression
/// targets are used raw. Non-convergence after 100 iterations keeps the last
/// iterate and logs a warning.
pub fn logme_score(f: &FeatureMatrix, y: &LabelVector) -> Result<f64, BaselineError> {
    let (n, d) = (f.n(), f.d());
    let targets: Vec<Vec<f64>> = match y {
        LabelVector::Classification { ids, num_classes } => {
            if ids.len() != n {
                return Err(BaselineError::LengthMismatch { labels: ids.len(), rows: n });
            }
            (0..*num_classes)
                .map(|cls| ids.iter().map(|&id| if id == cls { 1.0 } else { 0.0 }).collect())
                .collect()
        }
        LabelVector::Regression { values } => {
            if values.len() != n {
                return Err(BaselineError::LengthMismatch { labels: values.len(), rows: n });
            }
            vec![values.clone()]
        }
    };

    let g = linalg::gram(f, SidePolicy::ForceFeature)?;
    let (lambda_raw, vecs) = linalg::sym_eigen(g.data(), d, true)
        .map_err(|index| LinalgError::NumericFailure { index })?;
    let lambda: Vec<f64> = lambda_raw.iter().map(|&l| l.max(0.0)).collect();
    let v = vecs.expect("eigenvectors were requested");

    let evidences: Vec<Option<(f64, bool)>> = targets
        .par_iter()
        .map(|t| {
            let yty = linalg::dot(t, t);
            if yty == 0.0 {
                return None;
            }
            // q = F' t, then p = V' q (coordinates in the eigenbasis)
            let mut q = vec![0.0f64; d];
            for i in 0..n {
                let ti = t[i];
                if ti != 0.0 {
                    for (qj, &fij) in q.iter_mut().zip(f.row(i)) {
                        *qj += ti * fij;
                    }
                }
            }
            let mut p = vec![0.0f64; d];
            for j in 0..d {
                let mut s = 0.0f64;
                for i in 0..d {
                    s += v[i * d + j] * q[i];
                }
                p[j] = s;
            }
            Some(logme_single_target(&lambda, &p, yty, n, d))
        })
        .collect();

    let mut used = Vec::with_capacity(evidences.len());
    for (idx, ev) in evidences.iter().enumerate() {
        match ev {
            Some((value, converged)) => {
                if !converged {
                    log::warn!("evidence iteration for target {idx} hit the iteration cap");
                }
                used.push(*value);
            }
            None => log::warn!("target {idx} is identically zero; skipped"),
        }
    }
    if used.is_empty() {
        return Err(BaselineError::DegenerateTargets);
    }
    Ok(linalg::fsum(&used) / (used.len() as f64 * n as f64))
}

/// Label-feature correlation: cosine similarity between the doubly centered
/// kernel FF' and the centered class-agreement matrix (+1 same class, -1
/// different). Computed in factored form, so the n x n kernel is never
/// materialized; the value matches the literal definition to rounding.
pub fn lfc_score(f: &FeatureMatrix, y: &LabelVector) -> Result<f64, BaselineError> {
    let (ids, c) = class_ids(y, f.n())?;
    let (n, d) = (f.n(), f.d());
    let mu = column_means(f);
    let (means, counts) = class_means(f, ids, c);
    if counts.iter().filter(|&&cnt| cnt > 0).count() < 2 {
        return Err(BaselineError::DegenerateLabels);
    }

    // <centered K, centered A> = 2 sum_c || n_c (mu_c - mu) ||^2
    let mut ip_terms = Vec::with_capacity(c);
    for cls in 0..c {
        if counts[cls] == 0 {
            continue;
        }
        let nc = counts[cls] as f64;
        let mut sq = 0.0f64;
        for j in 0..d {
            let delta = means[cls * d + j] - mu[j];
            sq += delta * delta;
        }
        ip_terms.push(2.0 * nc * nc * sq);
    }
    let ip = linalg::fsum(&ip_terms);

    // ||centered K||_F == ||G~||_F with G~ the centered feature Gram
    let fc = centered(f, &mu);
    let g = linalg::gram(&fc, SidePolicy::ForceFeature)?;
    let mut k_sq_terms = Vec::with_capacity(d * d);
    for &v in g.data() {
        k_sq_terms.push(v * v);
    }
    let k_norm_sq = linalg::fsum(&k_sq_terms);
    if k_norm_sq == 0.0 {
        return Err(BaselineError::ZeroKernel);
    }

    // ||centered A||_F^2 = 4 sum_{c,c'} (delta n_c - n_c n_c' / n)^2
    let nf = n as f64;
    let mut a_terms = Vec::with_capacity(c * c);
    for a in 0..c {
        for b in 0..c {
            let na = counts[a] as f64;
            let nb = counts[b] as f64;
            let dotv = if a == b { na - na * nb / nf } else { -na * nb / nf };
            a_terms.push(4.0 * dotv * dotv);
        }
    }
    let a_norm_sq = linalg::fsum(&a_terms);

    Ok(ip / (k_norm_sq.sqrt() * a_norm_sq.sqrt()))
}
