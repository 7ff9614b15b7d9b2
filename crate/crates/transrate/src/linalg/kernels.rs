//! Pinned-order multiply-accumulate kernels.
//!
//! Every reduction in this module runs in one fixed, documented order so that
//! results are bit-identical across runs, thread counts, and dispatch paths:
//!
//! * dot products accumulate in four lanes over chunks of 4 (lane `l` holds
//!   the `x[4k+l]*y[4k+l]` contributions), the tail accumulates into a fifth
//!   scalar in index order, and the final combine is
//!   `((acc0 + acc1) + (acc2 + acc3)) + tail`;
//! * Gram accumulation adds row contributions in ascending row order,
//!   blocked for cache locality without reordering any single element's sum;
//! * every multiply-accumulate goes through `f64::mul_add`, so hardware
//!   without fused multiply-add takes a slower soft-float path with the same
//!   rounding.
//!
//! On x86_64 the hot loops are re-instantiated under AVX2+FMA when the CPU
//! supports it. The instruction selection changes; the arithmetic does not.

use std::ops::Range;

#[cfg(target_arch = "x86_64")]
fn fma_available() -> bool {
    use std::sync::OnceLock;
    static FMA: OnceLock<bool> = OnceLock::new();
    *FMA.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
}

#[inline(always)]
fn dot_body(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let split = x.len() - (x.len() & 3);
    let (xh, xt) = x.split_at(split);
    let (yh, yt) = y.split_at(split);
    let mut acc = [0.0f64; 4];
    for (cx, cy) in xh.chunks_exact(4).zip(yh.chunks_exact(4)) {
        acc[0] = cx[0].mul_add(cy[0], acc[0]);
        acc[1] = cx[1].mul_add(cy[1], acc[1]);
        acc[2] = cx[2].mul_add(cy[2], acc[2]);
        acc[3] = cx[3].mul_add(cy[3], acc[3]);
    }
    let mut tail = 0.0f64;
    for (a, b) in xt.iter().zip(yt.iter()) {
        tail = a.mul_add(*b, tail);
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Four dot products sharing loads: (x0·y0, x0·y1, x1·y0, x1·y1).
///
/// Each of the four results uses exactly the lane pattern of [`dot`], so an
/// entry computed through this kernel is bit-identical to a plain dot.
#[inline(always)]
fn dot2x2_body(x0: &[f64], x1: &[f64], y0: &[f64], y1: &[f64]) -> [f64; 4] {
    let len = x0.len();
    debug_assert!(x1.len() == len && y0.len() == len && y1.len() == len);
    let split = len - (len & 3);
    let mut a00 = [0.0f64; 4];
    let mut a01 = [0.0f64; 4];
    let mut a10 = [0.0f64; 4];
    let mut a11 = [0.0f64; 4];
    let mut p = 0;
    while p < split {
        for l in 0..4 {
            let u0 = x0[p + l];
            let u1 = x1[p + l];
            let v0 = y0[p + l];
            let v1 = y1[p + l];
            a00[l] = u0.mul_add(v0, a00[l]);
            a01[l] = u0.mul_add(v1, a01[l]);
            a10[l] = u1.mul_add(v0, a10[l]);
            a11[l] = u1.mul_add(v1, a11[l]);
        }
        p += 4;
    }
    let mut t00 = 0.0f64;
    let mut t01 = 0.0f64;
    let mut t10 = 0.0f64;
    let mut t11 = 0.0f64;
    for l in split..len {
        let u0 = x0[l];
        let u1 = x1[l];
        let v0 = y0[l];
        let v1 = y1[l];
        t00 = u0.mul_add(v0, t00);
        t01 = u0.mul_add(v1, t01);
        t10 = u1.mul_add(v0, t10);
        t11 = u1.mul_add(v1, t11);
    }
    [
        ((a00[0] + a00[1]) + (a00[2] + a00[3])) + t00,
        ((a01[0] + a01[1]) + (a01[2] + a01[3])) + t01,
        ((a10[0] + a10[1]) + (a10[2] + a10[3])) + t10,
        ((a11[0] + a11[1]) + (a11[2] + a11[3])) + t11,
    ]
}

#[inline(always)]
fn axpy_body(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi = xi.mul_add(s, *yi);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn dot_avx2(x: &[f64], y: &[f64]) -> f64 {
    dot_body(x, y)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if fma_available() {
        return unsafe { dot_avx2(x, y) };
    }
    dot_body(x, y)
}

/// Rows `jr` of the feature-side Gram F'F, written into `out`
/// (`(jr.len()) x d`, row-major, columns `< j` left as written by caller).
///
/// For each output element the row contributions are added in ascending row
/// index; the row blocking below only improves locality.
#[inline(always)]
fn gram_feature_rows_body(rows: &[f64], n: usize, d: usize, jr: Range<usize>, out: &mut [f64]) {
    const BLOCK: usize = 128;
    let mut b0 = 0;
    while b0 < n {
        let b1 = usize::min(n, b0 + BLOCK);
        for j in jr.clone() {
            let orow = &mut out[(j - jr.start) * d + j..(j - jr.start) * d + d];
            for i in b0..b1 {
                let ri = &rows[i * d..(i + 1) * d];
                axpy_body(ri[j], &ri[j..], orow);
            }
        }
        b0 = b1;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn gram_feature_rows_avx2(
    rows: &[f64],
    n: usize,
    d: usize,
    jr: Range<usize>,
    out: &mut [f64],
) {
    gram_feature_rows_body(rows, n, d, jr, out)
}

pub(crate) fn gram_feature_rows(rows: &[f64], n: usize, d: usize, jr: Range<usize>, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if fma_available() {
        return unsafe { gram_feature_rows_avx2(rows, n, d, jr, out) };
    }
    gram_feature_rows_body(rows, n, d, jr, out)
}

/// Rows `ir` of the sample-side Gram FF', written into `out`
/// (`(ir.len()) x n`, row-major; only the upper triangle `j >= i` is filled).
///
/// Every entry is the pinned-order dot of two sample rows; the 2x2 pairing
/// and the column tiling are locality devices that do not change any bit.
#[inline(always)]
fn gram_sample_rows_body(rows: &[f64], n: usize, d: usize, ir: Range<usize>, out: &mut [f64]) {
    const TILE: usize = 48;
    let mut jt0 = ir.start;
    while jt0 < n {
        let jt1 = usize::min(n, jt0 + TILE);
        let ihi = usize::min(ir.end, jt1);
        let mut i = ir.start;
        while i < ihi {
            let paired = i + 1 < ihi;
            let x0 = &rows[i * d..(i + 1) * d];
            if paired {
                let x1 = &rows[(i + 1) * d..(i + 2) * d];
                let o0 = (i - ir.start) * n;
                let o1 = (i + 1 - ir.start) * n;
                let mut j = usize::max(i, jt0);
                if j == i {
                    out[o0 + i] = dot_body(x0, x0);
                    out[o0 + i + 1] = dot_body(x0, x1);
                    out[o1 + i + 1] = dot_body(x1, x1);
                    j = i + 2;
                }
                while j + 1 < jt1 {
                    let y0 = &rows[j * d..(j + 1) * d];
                    let y1 = &rows[(j + 1) * d..(j + 2) * d];
                    let q = dot2x2_body(x0, x1, y0, y1);
                    out[o0 + j] = q[0];
                    out[o0 + j + 1] = q[1];
                    out[o1 + j] = q[2];
                    out[o1 + j + 1] = q[3];
                    j += 2;
                }
                if j < jt1 {
                    let y0 = &rows[j * d..(j + 1) * d];
                    out[o0 + j] = dot_body(x0, y0);
                    out[o1 + j] = dot_body(x1, y0);
                }
                i += 2;
            } else {
                let o0 = (i - ir.start) * n;
                for j in usize::max(i, jt0)..jt1 {
                    let y0 = &rows[j * d..(j + 1) * d];
                    out[o0 + j] = dot_body(x0, y0);
                }
                i += 1;
            }
        }
        jt0 = jt1;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn gram_sample_rows_avx2(
    rows: &[f64],
    n: usize,
    d: usize,
    ir: Range<usize>,
    out: &mut [f64],
) {
    gram_sample_rows_body(rows, n, d, ir, out)
}

pub(crate) fn gram_sample_rows(rows: &[f64], n: usize, d: usize, ir: Range<usize>, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if fma_available() {
        return unsafe { gram_sample_rows_avx2(rows, n, d, ir, out) };
    }
    gram_sample_rows_body(rows, n, d, ir, out)
}

/// In-place lower Cholesky factor of a symmetric positive-definite matrix
/// (`k x k`, row-major; only the lower triangle is read and written).
/// Returns the failing diagonal index when a pivot is nonpositive or
/// non-finite.
#[inline(always)]
fn cholesky_body(a: &mut [f64], k: usize) -> Result<(), usize> {
    for i in 0..k {
        let (done, rest) = a.split_at_mut(i * k);
        let row_i = &mut rest[..k];
        for j in 0..i {
            let row_j = &done[j * k..j * k + j];
            let s = dot_body(&row_i[..j], row_j);
            row_i[j] = (row_i[j] - s) / done[j * k + j];
        }
        let s = dot_body(&row_i[..i], &row_i[..i]);
        let v = row_i[i] - s;
        if !(v > 0.0) || !v.is_finite() {
            return Err(i);
        }
        row_i[i] = v.sqrt();
    }
    Ok(())
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn cholesky_avx2(a: &mut [f64], k: usize) -> Result<(), usize> {
    cholesky_body(a, k)
}

pub(crate) fn cholesky_in_place(a: &mut [f64], k: usize) -> Result<(), usize> {
    #[cfg(target_arch = "x86_64")]
    if fma_available() {
        return unsafe { cholesky_avx2(a, k) };
    }
    cholesky_body(a, k)
}

/// Solves L L' x = b given the lower factor from [`cholesky_in_place`],
/// overwriting `b` with `x`.
pub(crate) fn cholesky_solve(l: &[f64], k: usize, b: &mut [f64]) {
    for i in 0..k {
        let s = dot(&l[i * k..i * k + i], &b[..i]);
        b[i] = (b[i] - s) / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = 0.0f64;
        for j in (i + 1)..k {
            s = l[j * k + i].mul_add(b[j], s);
        }
        b[i] = (b[i] - s) / l[i * k + i];
    }
}

/// Correctly rounded sum of a slice of finite doubles (Shewchuk partials,
/// the algorithm behind Python's `math.fsum`).
///
/// The result depends only on the multiset of inputs, not their order, which
/// is what makes scores invariant under class-id permutation: per-class terms
/// arrive in a different order but round to the same bits.
pub(crate) fn fsum(xs: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(16);
    for &item in xs {
        let mut x = item;
        let mut keep = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[keep] = lo;
                keep += 1;
            }
            x = hi;
        }
        partials.truncate(keep);
        partials.push(x);
    }
    let mut n = partials.len();
    let mut hi = 0.0f64;
    if n > 0 {
        n -= 1;
        hi = partials[n];
        let mut lo = 0.0f64;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = partials[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // round-half-to-even correction when the remainder is exactly half
        if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// Splits `0..k` into at most `parts` contiguous ranges with approximately
/// equal total `weight`, for handing disjoint output bands to worker threads.
pub(crate) fn balanced_ranges(
    k: usize,
    parts: usize,
    weight: impl Fn(usize) -> usize,
) -> Vec<Range<usize>> {
    let parts = parts.max(1);
    let total: usize = (0..k).map(&weight).sum();
    let mut ranges = Vec::with_capacity(parts);
    let mut start = 0;
    let mut acc = 0usize;
    let mut consumed = 0usize;
    for idx in 0..k {
        acc += weight(idx);
        let remaining_parts = parts - ranges.len();
        if remaining_parts > 1 && acc * remaining_parts >= total - consumed {
            ranges.push(start..idx + 1);
            start = idx + 1;
            consumed += acc;
            acc = 0;
        }
    }
    if start < k {
        ranges.push(start..k);
    }
    if ranges.is_empty() {
        ranges.push(0..k);
    }
    ranges
}
