//! Dense symmetric linear algebra for coding-rate computation: Gram
//! construction on the cheaper side, positive-definite log-determinants,
//! singular values, and per-row normalization.
//!
//! Everything here is deterministic. Accumulation orders are pinned (see
//! [`kernels`]), so identical inputs give bit-identical outputs no matter how
//! many threads the surrounding rayon pool has.

mod eigen;
mod kernels;

use std::ops::Range;

use thiserror::Error;

pub(crate) use eigen::sym_eigen;
pub(crate) use kernels::{cholesky_in_place, cholesky_solve, dot, fsum};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("data length {len} does not fit shape {n}x{d}")]
    ShapeMismatch { len: usize, n: usize, d: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("accumulation overflowed to a non-finite value")]
    NumericOverflow,
    #[error("numeric failure at diagonal index {index}")]
    NumericFailure { index: usize },
}

/// An `n x d` matrix of per-sample feature vectors, row-major, all entries
/// finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n: usize,
    d: usize,
    unit_normalized: bool,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn from_rows(data: Vec<f64>, n: usize, d: usize) -> Result<Self, LinalgError> {
        if n == 0 || d == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != n * d {
            return Err(LinalgError::ShapeMismatch { len: data.len(), n, d });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFiniteEntry { row: pos / d, col: pos % d });
        }
        Ok(FeatureMatrix { data, n, d, unit_normalized: false })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn is_unit_normalized(&self) -> bool {
        self.unit_normalized
    }

    /// Returns a copy with every nonzero row scaled to unit L2 norm, plus the
    /// number of rows that were exactly zero and therefore left unchanged.
    pub fn unit_normalize_rows(&self) -> (FeatureMatrix, usize) {
        let mut data = self.data.clone();
        let mut zero_rows = 0usize;
        for i in 0..self.n {
            let row = &mut data[i * self.d..(i + 1) * self.d];
            let norm = kernels::dot(row, row).sqrt();
            if norm == 0.0 {
                zero_rows += 1;
                continue;
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        (
            FeatureMatrix { data, n: self.n, d: self.d, unit_normalized: true },
            zero_rows,
        )
    }

    /// Gathers the given rows (in the given order) into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            data,
            n: indices.len(),
            d: self.d,
            unit_normalized: self.unit_normalized,
        }
    }
}

/// Which Gram product to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SidePolicy {
    /// The smaller of the two sides; ties go to the feature side.
    Auto,
    /// d x d, F'F.
    ForceFeature,
    /// n x n, FF'. Memory is n^2; the caller owns that decision.
    ForceSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Feature,
    Sample,
}

/// A symmetric positive-semidefinite Gram matrix tagged with the side it was
/// computed on.
#[derive(Debug, Clone)]
pub struct Gram {
    side: Side,
    k: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }
}

/// Forms the Gram matrix of `f` on the requested side.
///
/// Contributions are accumulated in ascending row order regardless of
/// blocking or thread count, so the result is bit-stable.
pub fn gram(f: &FeatureMatrix, policy: SidePolicy) -> Result<Gram, LinalgError> {
    let side = match policy {
        SidePolicy::Auto => {
            if f.d <= f.n {
                Side::Feature
            } else {
                Side::Sample
            }
        }
        SidePolicy::ForceFeature => Side::Feature,
        SidePolicy::ForceSample => Side::Sample,
    };
    let k = match side {
        Side::Feature => f.d,
        Side::Sample => f.n,
    };
    let mut data = vec![0.0f64; k * k];
    let parts = rayon::current_num_threads();
    let ranges = kernels::balanced_ranges(k, parts, |idx| k - idx);
    if ranges.len() == 1 {
        match side {
            Side::Feature => kernels::gram_feature_rows(&f.data, f.n, f.d, 0..k, &mut data),
            Side::Sample => kernels::gram_sample_rows(&f.data, f.n, f.d, 0..k, &mut data),
        }
    } else {
        let mut tasks: Vec<(Range<usize>, &mut [f64])> = Vec::with_capacity(ranges.len());
        let mut rest: &mut [f64] = &mut data;
        for r in ranges {
            let (band, tail) = rest.split_at_mut((r.end - r.start) * k);
            rest = tail;
            tasks.push((r, band));
        }
        let rows = &f.data;
        let (n, d) = (f.n, f.d);
        rayon::scope(|s| {
            for (r, band) in tasks {
                s.spawn(move |_| match side {
                    Side::Feature => kernels::gram_feature_rows(rows, n, d, r, band),
                    Side::Sample => kernels::gram_sample_rows(rows, n, d, r, band),
                });
            }
        });
    }
    for i in 1..k {
        for j in 0..i {
            data[i * k + j] = data[j * k + i];
        }
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NumericOverflow);
    }
    Ok(Gram { side, k, data })
}

/// log det(I + alpha * G) in nats, via Cholesky on the shifted matrix, with a
/// fallback to eigenvalue summation if the factorization hits a bad pivot.
pub fn logdet_ipd(g: &Gram, alpha: f64) -> Result<f64, LinalgError> {
    assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive");
    let k = g.k;
    let mut a = vec![0.0f64; k * k];
    for i in 0..k {
        for j in 0..k {
            a[i * k + j] = alpha * g.data[i * k + j];
        }
        a[i * k + i] += 1.0;
    }
    match kernels::cholesky_in_place(&mut a, k) {
        Ok(()) => {
            let mut half = 0.0f64;
            for i in 0..k {
                half += a[i * k + i].ln();
            }
            let ld = 2.0 * half;
            if ld.is_finite() {
                Ok(ld)
            } else {
                let index = (0..k)
                    .find(|&i| !a[i * k + i].ln().is_finite())
                    .unwrap_or(0);
                Err(LinalgError::NumericFailure { index })
            }
        }
        Err(pivot) => {
            log::warn!(
                "cholesky pivot {pivot} of {k} failed; falling back to eigenvalue summation"
            );
            let (vals, _) = eigen::sym_eigen(&g.data, k, false)
                .map_err(|index| LinalgError::NumericFailure { index })?;
            let mut ld = 0.0f64;
            for &lambda in &vals {
                ld += (alpha * lambda.max(0.0)).ln_1p();
            }
            if ld.is_finite() {
                Ok(ld)
            } else {
                Err(LinalgError::NumericFailure { index: pivot })
            }
        }
    }
}

/// Singular values of `f`, descending, with explicit zeros up to min(n, d).
pub fn singular_values(f: &FeatureMatrix) -> Result<Vec<f64>, LinalgError> {
    let g = gram(f, SidePolicy::Auto)?;
    let (vals, _) = eigen::sym_eigen(&g.data, g.k, false)
        .map_err(|index| LinalgError::NumericFailure { index })?;
    Ok(vals.iter().rev().map(|&l| l.max(0.0).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_rng(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        }
    }

    fn random_matrix(seed: u64, n: usize, d: usize) -> FeatureMatrix {
        let mut next = test_rng(seed);
        let data: Vec<f64> = (0..n * d).map(|_| next()).collect();
        FeatureMatrix::from_rows(data, n, d).unwrap()
    }

    fn nalgebra_eigenvalues(data: &[f64], k: usize) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(k, k, data);
        let mut vals: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    #[test]
    fn from_rows_validates() {
        assert_eq!(
            FeatureMatrix::from_rows(vec![], 0, 3).unwrap_err(),
            LinalgError::EmptyMatrix
        );
        assert_eq!(
            FeatureMatrix::from_rows(vec![1.0; 5], 2, 3).unwrap_err(),
            LinalgError::ShapeMismatch { len: 5, n: 2, d: 3 }
        );
        assert_eq!(
            FeatureMatrix::from_rows(vec![1.0, f64::NAN, 0.0, 1.0, 2.0, 3.0], 2, 3).unwrap_err(),
            LinalgError::NonFiniteEntry { row: 0, col: 1 }
        );
    }

    #[test]
    fn unit_normalize_three_four_five() {
        let f = FeatureMatrix::from_rows(vec![3.0, 4.0], 1, 2).unwrap();
        let (g, zeros) = f.unit_normalize_rows();
        assert_eq!(zeros, 0);
        assert_eq!(g.row(0), &[0.6, 0.8]);
        assert!(g.is_unit_normalized());
    }

    #[test]
    fn unit_normalize_keeps_zero_rows() {
        let f = FeatureMatrix::from_rows(vec![0.0, 0.0, 1.0, 1.0], 2, 2).unwrap();
        let (g, zeros) = f.unit_normalize_rows();
        assert_eq!(zeros, 1);
        assert_eq!(g.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn unit_normalize_random_norms() {
        let f = random_matrix(11, 10, 5);
        let (g, zeros) = f.unit_normalize_rows();
        assert_eq!(zeros, 0);
        for i in 0..g.n() {
            let norm = dot(g.row(i), g.row(i)).sqrt();
            assert!((norm - 1.0).abs() <= 1e-12, "row {i} norm {norm}");
        }
    }

    #[test]
    fn gram_identity_auto() {
        let f = FeatureMatrix::from_rows(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let g = gram(&f, SidePolicy::Auto).unwrap();
        assert_eq!(g.side(), Side::Feature);
        assert_eq!(g.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn gram_rank_one_sample_side() {
        let f = FeatureMatrix::from_rows(vec![1.0, 0.0, 1.0, 0.0], 2, 2).unwrap();
        let g = gram(&f, SidePolicy::ForceSample).unwrap();
        assert_eq!(g.side(), Side::Sample);
        assert_eq!(g.data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn gram_sides_share_nonzero_eigenvalues() {
        let f = random_matrix(7, 7, 3);
        let gf = gram(&f, SidePolicy::ForceFeature).unwrap();
        let gs = gram(&f, SidePolicy::ForceSample).unwrap();
        let ef = nalgebra_eigenvalues(gf.data(), 3);
        let es = nalgebra_eigenvalues(gs.data(), 7);
        // the sample side carries 4 extra (numerically) zero eigenvalues
        for (a, b) in ef.iter().rev().zip(es.iter().rev()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        for v in es.iter().take(4) {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn logdet_of_identity_shift_is_zero() {
        let f = FeatureMatrix::from_rows(vec![0.0; 12], 4, 3).unwrap();
        let g = gram(&f, SidePolicy::Auto).unwrap();
        assert_eq!(logdet_ipd(&g, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn logdet_of_two_identity() {
        let f = FeatureMatrix::from_rows(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let g = gram(&f, SidePolicy::Auto).unwrap();
        let ld = logdet_ipd(&g, 1.0).unwrap();
        assert!((ld - 2.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logdet_matches_eigenvalue_oracle() {
        // random PSD 6x6 built as a Gram of an 8x6 matrix
        let f = random_matrix(42, 8, 6);
        let g = gram(&f, SidePolicy::ForceFeature).unwrap();
        let alpha = 0.37;
        let ld = logdet_ipd(&g, alpha).unwrap();
        let oracle: f64 = nalgebra_eigenvalues(g.data(), 6)
            .iter()
            .map(|&l| (1.0 + alpha * l.max(0.0)).ln())
            .sum();
        assert!((ld - oracle).abs() <= 1e-9 * oracle.abs().max(1.0), "{ld} vs {oracle}");
    }

    #[test]
    fn singular_values_of_diagonal() {
        let f = FeatureMatrix::from_rows(vec![3.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let sv = singular_values(&f).unwrap();
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_values_of_zeros() {
        let f = FeatureMatrix::from_rows(vec![0.0; 8], 4, 2).unwrap();
        assert_eq!(singular_values(&f).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn singular_value_identity_cross_check() {
        let f = random_matrix(5, 5, 3);
        let (n, eps) = (5.0, 1e-2);
        let alpha = 1.0 / (n * eps);
        let sv = singular_values(&f).unwrap();
        let via_sv: f64 = sv.iter().map(|s| 0.5 * (1.0 + alpha * s * s).ln()).sum();
        let g = gram(&f, SidePolicy::Auto).unwrap();
        let via_ld = 0.5 * logdet_ipd(&g, alpha).unwrap();
        assert!((via_sv - via_ld).abs() <= 1e-9 * via_ld.abs().max(1.0));
    }

    #[test]
    fn squared_singular_values_sum_to_frobenius() {
        let f = random_matrix(301, 9, 4);
        let sv = singular_values(&f).unwrap();
        let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
        let fro: f64 = f.data().iter().map(|v| v * v).sum();
        assert!((sum_sq - fro).abs() <= 1e-8 * fro);
    }

    #[test]
    fn select_rows_gathers_in_order() {
        let f = FeatureMatrix::from_rows(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2).unwrap();
        let s = f.select_rows(&[2, 0]);
        assert_eq!(s.data(), &[5.0, 6.0, 1.0, 2.0]);
    }
}
