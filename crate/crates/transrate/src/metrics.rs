//! Correlation metrics between transferability scores and observed transfer
//! accuracies, plus ranking reports over a model zoo.
//!
//! Kendall's tau is the tie-corrected tau-b, computed from integer
//! concordance and tie counts (merge-sort inversion counting), so the fast
//! path equals the quadratic definition exactly. The weighted tau uses
//! additive hyperbolic weights on accuracy-descending ranks, symmetrized over
//! the two rank sources. Pearson sums run through an order-independent
//! compensated sum, which makes every metric here invariant under permuting
//! the entries.

use thiserror::Error;

use crate::coding::TransferScore;
use crate::linalg::fsum;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("need at least {needed} entries, got {n}")]
    TooFewEntries { n: usize, needed: usize },
    #[error("non-finite value for model {0}")]
    NonFiniteEntry(String),
    #[error("duplicate model name {0}")]
    DuplicateName(String),
    #[error("{0} values have zero variance")]
    ZeroVariance(&'static str),
    #[error("all values tied on one side; rank correlation is undefined")]
    AllTied,
    #[error("scores mix methods or config fingerprints")]
    MixedConfig,
}

/// Paired (model, score, accuracy) observations for correlation metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreAccuracyPairs {
    entries: Vec<(String, f64, f64)>,
}

impl ScoreAccuracyPairs {
    /// Validates: at least two entries, everything finite, names unique.
    pub fn new(entries: Vec<(String, f64, f64)>) -> Result<Self, MetricError> {
        if entries.len() < 2 {
            return Err(MetricError::TooFewEntries { n: entries.len(), needed: 2 });
        }
        for (name, score, acc) in &entries {
            if !score.is_finite() || !acc.is_finite() {
                return Err(MetricError::NonFiniteEntry(name.clone()));
            }
        }
        let mut names: Vec<&str> = entries.iter().map(|(n, _, _)| n.as_str()).collect();
        names.sort_unstable();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(MetricError::DuplicateName(w[0].to_owned()));
            }
        }
        Ok(ScoreAccuracyPairs { entries })
    }

    pub fn entries(&self) -> &[(String, f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    fn accuracies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.2).collect()
    }
}

/// Product-moment correlation between score and accuracy.
pub fn pearson(pairs: &ScoreAccuracyPairs) -> Result<f64, MetricError> {
    let x = pairs.scores();
    let y = pairs.accuracies();
    let n = x.len() as f64;
    let mx = fsum(&x) / n;
    let my = fsum(&y) / n;
    let cross: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let xx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let yy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let sxx = fsum(&xx);
    let syy = fsum(&yy);
    if sxx == 0.0 {
        return Err(MetricError::ZeroVariance("score"));
    }
    if syy == 0.0 {
        return Err(MetricError::ZeroVariance("accuracy"));
    }
    Ok(fsum(&cross) / (sxx * syy).sqrt())
}

/// Pairs (i, j), i < j, tied on the given axis, as t*(t-1)/2 per tie group.
fn tie_pairs(values: &[f64]) -> u64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut pairs = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    pairs + run * (run - 1) / 2
}

/// Counts pairs i < j with values[i] > values[j] by merge sort.
fn merge_count_inversions(values: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inv = merge_count_inversions(left, buf) + merge_count_inversions(right, buf);
    buf[..n].copy_from_slice(&[&left[..], &right[..]].concat());
    let (lo, hi) = buf[..n].split_at(mid);
    let (mut i, mut j) = (0usize, 0usize);
    for out in values.iter_mut() {
        if i < lo.len() && (j >= hi.len() || lo[i] <= hi[j]) {
            *out = lo[i];
            i += 1;
        } else {
            // hi[j] jumps ahead of every remaining left element
            inv += (lo.len() - i) as u64;
            *out = hi[j];
            j += 1;
        }
    }
    inv
}

/// Tie-corrected Kendall tau-b:
/// (concordant - discordant) / sqrt((n0 - n1) * (n0 - n2)), with n0 the
/// total pair count and n1, n2 the tied-pair counts per axis. Integer counts
/// come from one sort plus merge-sort inversion counting, so the result is
/// bit-identical to the quadratic definition.
pub fn kendall_tau(pairs: &ScoreAccuracyPairs) -> Result<f64, MetricError> {
    let x = pairs.scores();
    let y = pairs.accuracies();
    let n = x.len();
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tie_pairs(&x);
    let n2 = tie_pairs(&y);
    if n0 == n1 || n0 == n2 {
        return Err(MetricError::AllTied);
    }
    // joint ties: pairs tied on both axes at once
    let mut both: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    both.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut n3 = 0u64;
    let mut run = 1u64;
    for w in both.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            n3 += run * (run - 1) / 2;
            run = 1;
        }
    }
    n3 += run * (run - 1) / 2;
    // discordant pairs: inversions of y once sorted by (x asc, y asc)
    let mut y_in_x_order: Vec<f64> = both.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0f64; n];
    let dis = merge_count_inversions(&mut y_in_x_order, &mut buf);
    let con_minus_dis = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * dis as i64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok(con_minus_dis as f64 / denom)
}

/// Ranks for the weight schedule: position after sorting the given axis
/// descending, ties broken by model name ascending so the ranking never
/// depends on input order.
fn hyperbolic_weights(pairs: &ScoreAccuracyPairs, axis: fn(&(String, f64, f64)) -> f64) -> Vec<f64> {
    let n = pairs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        let (ea, eb) = (&pairs.entries[a], &pairs.entries[b]);
        axis(eb).total_cmp(&axis(ea)).then_with(|| ea.0.cmp(&eb.0))
    });
    let mut w = vec![0.0f64; n];
    for (rank, &idx) in order.iter().enumerate() {
        w[idx] = 1.0 / (rank as f64 + 1.0);
    }
    w
}

fn weighted_tau_one_source(x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let n = x.len();
    let mut signed = Vec::with_capacity(n * (n - 1) / 2);
    let mut total = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let weight = w[i] + w[j];
            let prod = (x[i] - x[j]) * (y[i] - y[j]);
            let sign = if prod > 0.0 {
                1.0
            } else if prod < 0.0 {
                -1.0
            } else {
                0.0
            };
            signed.push(sign * weight);
            total.push(weight);
        }
    }
    fsum(&signed) / fsum(&total)
}

/// Hyperbolically weighted Kendall correlation: rank items by accuracy
/// descending (rank 0 is best), weight item i by 1/(rank_i + 1) and each pair
/// by w_i + w_j, then take (weighted concordant - weighted discordant) over
/// the total pair weight. The result is averaged with the same statistic
/// computed from score-descending ranks.
pub fn weighted_tau(pairs: &ScoreAccuracyPairs) -> Result<f64, MetricError> {
    let x = pairs.scores();
    let y = pairs.accuracies();
    let n = x.len();
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    if tie_pairs(&x) == n0 || tie_pairs(&y) == n0 {
        return Err(MetricError::AllTied);
    }
    let w_acc = hyperbolic_weights(pairs, |e| e.2);
    let w_score = hyperbolic_weights(pairs, |e| e.1);
    let by_acc = weighted_tau_one_source(&x, &y, &w_acc);
    let by_score = weighted_tau_one_source(&x, &y, &w_score);
    Ok(0.5 * (by_acc + by_score))
}

/// One row of a ranking report.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    /// 1-based position.
    pub rank: usize,
    pub model_name: String,
    pub value: f64,
}

/// Models ordered by one method's score under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub method: String,
    pub config_fingerprint: u64,
    pub entries: Vec<RankedModel>,
}

/// Orders scores descending, ties broken by model name ascending. Every score
/// must come from the same method and config fingerprint.
pub fn rank_models(scores: &[TransferScore]) -> Result<RankReport, MetricError> {
    let first = scores
        .first()
        .ok_or(MetricError::TooFewEntries { n: 0, needed: 1 })?;
    if scores
        .iter()
        .any(|s| s.method != first.method || s.config_fingerprint != first.config_fingerprint)
    {
        return Err(MetricError::MixedConfig);
    }
    let mut order: Vec<&TransferScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then_with(|| a.model_name.cmp(&b.model_name))
    });
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(i, s)| RankedModel {
            rank: i + 1,
            model_name: s.model_name.clone(),
            value: s.value,
        })
        .collect();
    Ok(RankReport {
        method: first.method.clone(),
        config_fingerprint: first.config_fingerprint,
        entries,
    })
}
