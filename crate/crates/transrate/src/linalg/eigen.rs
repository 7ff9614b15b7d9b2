//! Symmetric eigendecomposition via Householder tridiagonalization (tred2)
//! followed by the implicit-shift QL iteration (tql2), the classic EISPACK
//! routines in their well-worn Fortran-to-C translation, ported to safe Rust.
//!
//! Used as the factorization fallback for log-determinants, for singular
//! values, and for the evidence computations that need eigenvectors. Not a
//! performance path; the hot code is Cholesky.

/// Eigenvalues (ascending) and, when requested, orthonormal eigenvectors of
/// a symmetric `k x k` matrix given in row-major full storage. Eigenvector
/// `j` is stored as column `j` of the returned row-major matrix.
///
/// Fails with the index of the offending eigenvalue when the QL iteration
/// does not converge within 60 sweeps.
pub(crate) fn sym_eigen(
    a: &[f64],
    k: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>), usize> {
    assert_eq!(a.len(), k * k);
    if k == 0 {
        return Ok((Vec::new(), want_vectors.then(Vec::new)));
    }
    let mut v = a.to_vec();
    let mut d = vec![0.0f64; k];
    let mut e = vec![0.0f64; k];
    tred2(&mut v, &mut d, &mut e, k, want_vectors);
    tql2(&mut v, &mut d, &mut e, k, want_vectors)?;
    Ok((d, want_vectors.then_some(v)))
}

fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize, want_vectors: bool) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0f64;
        let mut h = 0.0f64;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v[j * n + i] = f;
                let mut g = e[j] + v[j * n + j] * f;
                for kk in j + 1..i {
                    g += v[kk * n + j] * d[kk];
                    e[kk] += v[kk * n + j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0f64;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for kk in j..i {
                    v[kk * n + j] -= f * e[kk] + g * d[kk];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    if want_vectors {
        for i in 0..n - 1 {
            v[(n - 1) * n + i] = v[i * n + i];
            v[i * n + i] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for kk in 0..=i {
                    d[kk] = v[kk * n + i + 1] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0f64;
                    for kk in 0..=i {
                        g += v[kk * n + i + 1] * v[kk * n + j];
                    }
                    for kk in 0..=i {
                        v[kk * n + j] -= g * d[kk];
                    }
                }
            }
            for kk in 0..=i {
                v[kk * n + i + 1] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = v[(n - 1) * n + j];
            v[(n - 1) * n + j] = 0.0;
        }
        v[(n - 1) * n + n - 1] = 1.0;
    } else {
        // without the vector bookkeeping the tridiagonal diagonal sits on
        // the reduced matrix's diagonal
        for j in 0..n {
            d[j] = v[j * n + j];
        }
    }
    e[0] = 0.0;
}

fn tql2(
    v: &mut [f64],
    d: &mut [f64],
    e: &mut [f64],
    n: usize,
    want_vectors: bool,
) -> Result<(), usize> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = 2.0f64.powi(-52);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(l);
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for kk in 0..n {
                            h = v[kk * n + i + 1];
                            v[kk * n + i + 1] = s * v[kk * n + i] + c * h;
                            v[kk * n + i] = c * v[kk * n + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    for i in 0..n - 1 {
        let mut kk = i;
        let mut p = d[i];
        for j in i + 1..n {
            if d[j] < p {
                kk = j;
                p = d[j];
            }
        }
        if kk != i {
            d[kk] = d[i];
            d[i] = p;
            if want_vectors {
                for j in 0..n {
                    v.swap(j * n + i, j * n + kk);
                }
            }
        }
    }
    Ok(())
}
