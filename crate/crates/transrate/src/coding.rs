//! The coding-rate transferability score.
//!
//! The score of a feature matrix Z under labels Y is the difference between
//! the pooled coding rate R(Z, eps) = 1/2 logdet(I + 1/(n eps) Gram) and a
//! class-weighted combination of per-class coding rates, each evaluated with
//! its own 1/(n_c eps) factor. Large pooled rate means diverse features
//! (completeness); small per-class rates mean tight clusters (compactness).
//! The difference behaves like a mutual-information surrogate between
//! features and labels and rank-predicts fine-tuned accuracy.
//!
//! `eps` here is exactly the value substituted into the 1/(n*eps) factor.
//! Regression targets are converted to classification by equal-count binning
//! before scoring.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, FeatureMatrix, LinalgError, SidePolicy};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("labels must not be empty")]
    EmptyLabels,
    #[error("class id {id} at position {index} is out of range for {num_classes} classes")]
    InvalidClassId { index: usize, id: u32, num_classes: u32 },
    #[error("non-finite label value at position {index}")]
    NonFiniteLabel { index: usize },
    #[error("class {0} has no samples")]
    EmptyClass(u32),
    #[error("need at least 2 classes, got {classes}")]
    DegenerateLabels { classes: u32 },
    #[error("need at least {needed} samples, got {n}")]
    TooFewSamples { n: usize, needed: usize },
    #[error("label vector has {labels} entries but the matrix has {rows} rows")]
    LengthMismatch { labels: usize, rows: usize },
    #[error("operation expects the other label kind (classification vs regression)")]
    WrongLabelKind,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Target labels: class ids for classification, real values for regression.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelVector {
    Classification { ids: Vec<u32>, num_classes: u32 },
    Regression { values: Vec<f64> },
}

impl LabelVector {
    pub fn classification(ids: Vec<u32>, num_classes: u32) -> Result<Self, ScoreError> {
        if ids.is_empty() {
            return Err(ScoreError::EmptyLabels);
        }
        for (index, &id) in ids.iter().enumerate() {
            if id >= num_classes {
                return Err(ScoreError::InvalidClassId { index, id, num_classes });
            }
        }
        Ok(LabelVector::Classification { ids, num_classes })
    }

    /// Classification labels with the class count inferred as max id + 1.
    /// Ids absent from the data stay as (empty) classes, so class identities
    /// remain stable across models sharing a label file.
    pub fn classification_inferred(ids: Vec<u32>) -> Result<Self, ScoreError> {
        let max = *ids.iter().max().ok_or(ScoreError::EmptyLabels)?;
        LabelVector::classification(ids, max + 1)
    }

    pub fn regression(values: Vec<f64>) -> Result<Self, ScoreError> {
        if values.is_empty() {
            return Err(ScoreError::EmptyLabels);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScoreError::NonFiniteLabel { index });
        }
        Ok(LabelVector::Regression { values })
    }

    pub fn len(&self) -> usize {
        match self {
            LabelVector::Classification { ids, .. } => ids.len(),
            LabelVector::Regression { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_classes(&self) -> Option<u32> {
        match self {
            LabelVector::Classification { num_classes, .. } => Some(*num_classes),
            LabelVector::Regression { .. } => None,
        }
    }

    pub fn class_ids(&self) -> Option<&[u32]> {
        match self {
            LabelVector::Classification { ids, .. } => Some(ids),
            LabelVector::Regression { .. } => None,
        }
    }

    /// Sample count per class, indexed by class id.
    pub fn class_counts(&self) -> Result<Vec<usize>, ScoreError> {
        match self {
            LabelVector::Classification { ids, num_classes } => {
                let mut counts = vec![0usize; *num_classes as usize];
                for &id in ids {
                    counts[id as usize] += 1;
                }
                Ok(counts)
            }
            LabelVector::Regression { .. } => Err(ScoreError::WrongLabelKind),
        }
    }
}

/// How per-class coding rates combine into the conditional rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeighting {
    /// n_c / n weights, so each sample counts once. Default.
    Empirical,
    /// 1/C weights: the plain average of per-class rates, for parity with
    /// implementations that divide the class sum by the class count.
    Uniform,
    /// Unweighted sum of per-class rates.
    RawSum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    /// Distortion parameter; exactly the value in the 1/(n*eps) factor.
    pub eps: f64,
    /// Scale each feature row to unit L2 norm before scoring.
    pub unit_norm: bool,
    /// Divide the final score by the feature dimension d.
    pub per_dim: bool,
    pub class_weighting: ClassWeighting,
    /// Subtract the label entropy H(Y); useful only when comparing scores
    /// across targets with different label distributions.
    pub subtract_label_entropy: bool,
    /// Bin count when regression targets are converted to classes.
    pub regression_bins: u32,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            eps: 1e-4,
            unit_norm: true,
            per_dim: true,
            class_weighting: ClassWeighting::Empirical,
            subtract_label_entropy: false,
            regression_bins: 10,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(ScoreError::InvalidConfig("eps must be positive and finite"));
        }
        if self.regression_bins < 2 {
            return Err(ScoreError::InvalidConfig("regression_bins must be at least 2"));
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a fingerprint of every field, so reports can refuse
    /// to mix scores computed under different configurations.
    pub fn fingerprint(&self) -> u64 {
        fn eat(h: &mut u64, bytes: &[u8]) {
            for &b in bytes {
                *h ^= b as u64;
                *h = h.wrapping_mul(0x100000001b3);
            }
        }
        let mut h = 0xcbf29ce484222325u64;
        eat(&mut h, &self.eps.to_bits().to_le_bytes());
        let weighting = match self.class_weighting {
            ClassWeighting::Empirical => 0u8,
            ClassWeighting::Uniform => 1,
            ClassWeighting::RawSum => 2,
        };
        eat(
            &mut h,
            &[
                self.unit_norm as u8,
                self.per_dim as u8,
                weighting,
                self.subtract_label_entropy as u8,
            ],
        );
        eat(&mut h, &self.regression_bins.to_le_bytes());
        h
    }
}

/// One scored (model, method) pair, carrying enough context to validate that
/// scores being compared came from the same configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferScore {
    pub model_name: String,
    pub method: String,
    pub value: f64,
    pub config_fingerprint: u64,
    pub n: usize,
    pub d: usize,
    pub c: usize,
}

impl TransferScore {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.model_name = name.into();
        self
    }
}

/// R(Z, eps) = 1/2 logdet(I + 1/(n eps) Gram), in nats. Nonnegative; zero
/// exactly when the features are all zero.
pub fn coding_rate(f: &FeatureMatrix, eps: f64) -> Result<f64, ScoreError> {
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    let alpha = 1.0 / (f.n() as f64 * eps);
    let g = linalg::gram(f, SidePolicy::Auto)?;
    Ok(0.5 * linalg::logdet_ipd(&g, alpha)?)
}

/// Class-weighted combination of per-class coding rates, each using its own
/// 1/(n_c eps) factor. Per-class rates are computed independently (possibly
/// in parallel) and combined with an order-independent exact sum, so the
/// result does not depend on class numbering or thread count.
pub fn conditional_coding_rate(
    f: &FeatureMatrix,
    y: &LabelVector,
    eps: f64,
    weighting: ClassWeighting,
) -> Result<f64, ScoreError> {
    let ids = y.class_ids().ok_or(ScoreError::WrongLabelKind)?;
    if ids.len() != f.n() {
        return Err(ScoreError::LengthMismatch { labels: ids.len(), rows: f.n() });
    }
    let c = y.num_classes().unwrap() as usize;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &id) in ids.iter().enumerate() {
        groups[id as usize].push(i);
    }
    if let Some(empty) = groups.iter().position(|g| g.is_empty()) {
        return Err(ScoreError::EmptyClass(empty as u32));
    }
    let rates: Vec<Result<f64, ScoreError>> = groups
        .par_iter()
        .map(|rows| coding_rate(&f.select_rows(rows), eps))
        .collect();
    let n = f.n() as f64;
    let mut terms = Vec::with_capacity(c);
    for (cls, rate) in rates.into_iter().enumerate() {
        let rate = rate?;
        let term = match weighting {
            ClassWeighting::Empirical => (groups[cls].len() as f64 / n) * rate,
            ClassWeighting::Uniform | ClassWeighting::RawSum => rate,
        };
        terms.push(term);
    }
    let combined = linalg::fsum(&terms);
    Ok(match weighting {
        ClassWeighting::Empirical | ClassWeighting::RawSum => combined,
        ClassWeighting::Uniform => combined / c as f64,
    })
}

/// The transferability score: pooled minus conditional coding rate, with the
/// configured normalizations applied.
pub fn transrate(
    f: &FeatureMatrix,
    y: &LabelVector,
    cfg: &ScoreConfig,
) -> Result<TransferScore, ScoreError> {
    cfg.validate()?;
    if y.len() != f.n() {
        return Err(ScoreError::LengthMismatch { labels: y.len(), rows: f.n() });
    }
    let binned;
    let labels = match y {
        LabelVector::Classification { .. } => y,
        LabelVector::Regression { .. } => {
            binned = bin_regression_labels(y, cfg.regression_bins)?;
            &binned
        }
    };
    let c = labels.num_classes().unwrap();
    if c < 2 {
        return Err(ScoreError::DegenerateLabels { classes: c });
    }
    let normalized;
    let feats = if cfg.unit_norm {
        let (g, zero_rows) = f.unit_normalize_rows();
        if zero_rows > 0 {
            log::warn!("{zero_rows} all-zero feature rows were left unnormalized");
        }
        normalized = g;
        &normalized
    } else {
        f
    };
    let rz = coding_rate(feats, cfg.eps)?;
    let rzy = conditional_coding_rate(feats, labels, cfg.eps, cfg.class_weighting)?;
    let mut value = rz - rzy;
    if cfg.subtract_label_entropy {
        value -= label_entropy(labels)?;
    }
    if cfg.per_dim {
        value /= feats.d() as f64;
    }
    Ok(TransferScore {
        model_name: String::new(),
        method: "transrate".to_string(),
        value,
        config_fingerprint: cfg.fingerprint(),
        n: f.n(),
        d: f.d(),
        c: c as usize,
    })
}

/// Converts regression targets to `bins` classes by ranking values ascending
/// (ties broken by original index) and cutting into contiguous equal-count
/// groups; the first n mod bins groups take one extra sample. Class ids run
/// 0..bins-1 in ascending target order.
pub fn bin_regression_labels(y: &LabelVector, bins: u32) -> Result<LabelVector, ScoreError> {
    let values = match y {
        LabelVector::Regression { values } => values,
        LabelVector::Classification { .. } => return Err(ScoreError::WrongLabelKind),
    };
    let n = values.len();
    let bins_usize = bins as usize;
    if bins < 2 {
        return Err(ScoreError::InvalidConfig("regression_bins must be at least 2"));
    }
    if n < bins_usize {
        return Err(ScoreError::TooFewSamples { n, needed: bins_usize });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b))
    });
    let base = n / bins_usize;
    let extra = n % bins_usize;
    let mut ids = vec![0u32; n];
    let mut pos = 0usize;
    for group in 0..bins_usize {
        let size = base + usize::from(group < extra);
        for &orig in &order[pos..pos + size] {
            ids[orig] = group as u32;
        }
        pos += size;
    }
    LabelVector::classification(ids, bins)
}

/// Empirical label entropy in nats: -sum_c (n_c/n) ln(n_c/n), empty classes
/// contributing zero.
pub fn label_entropy(y: &LabelVector) -> Result<f64, ScoreError> {
    let counts = y.class_counts()?;
    let n = y.len() as f64;
    let terms: Vec<f64> = counts
        .iter()
        .filter(|&&cnt| cnt > 0)
        .map(|&cnt| {
            let p = cnt as f64 / n;
            p * p.ln()
        })
        .collect();
    Ok(-linalg::fsum(&terms))
}
