//! Dense generalized symmetric eigenvalues, used as an independent check on
//! the sparse path.
//!
//! `B = L Lᵀ`, `C = L⁻¹ S L⁻ᵀ`, Householder reduction of `C` to tridiagonal
//! form, then implicit-shift QL on the tridiagonal matrix.

use super::spectrum::Spectrum;
use super::EigenError;
use crate::sparse::SparseSymMatrix;

pub const DENSE_DIM_LIMIT: usize = 2000;

/// Full spectrum of the pencil `(S, B)` by dense reduction.
pub fn dense_eig_oracle(s: &SparseSymMatrix, b: &SparseSymMatrix) -> Result<Spectrum, EigenError> {
    let n = s.dim();
    if n > DENSE_DIM_LIMIT {
        return Err(EigenError::DimensionBudget {
            dim: n,
            limit: DENSE_DIM_LIMIT,
        });
    }
    assert_eq!(b.dim(), n);
    let eig = generalized_eigenvalues(s.to_dense(), b.to_dense(), n)?;
    Ok(Spectrum::from_values(eig.into_iter().map(|v| (v, 0.0)).collect()))
}

/// Eigenvalues (ascending) of the dense pencil given row-major matrices.
pub fn generalized_eigenvalues(mut s: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>, EigenError> {
    cholesky_in_place(&mut b, n)?;
    // W = L⁻¹ S, column by column of S
    for col in 0..n {
        forward_substitute(&b, n, &mut s, col);
    }
    // C = L⁻¹ Wᵀ
    transpose_in_place(&mut s, n);
    for col in 0..n {
        forward_substitute(&b, n, &mut s, col);
    }
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (s[i * n + j] + s[j * n + i]);
            s[i * n + j] = v;
            s[j * n + i] = v;
        }
    }
    let (mut d, mut e) = tridiagonalize(&mut s, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), EigenError> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if diag <= 0.0 {
            return Err(EigenError::NotPositiveDefinite { index: j });
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / ljj;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Overwrites column `col` of `m` with `L⁻¹ m[:, col]`.
fn forward_substitute(l: &[f64], n: usize, m: &mut [f64], col: usize) {
    for i in 0..n {
        let mut v = m[i * n + col];
        for k in 0..i {
            v -= l[i * n + k] * m[k * n + col];
        }
        m[i * n + col] = v / l[i * n + i];
    }
}

fn transpose_in_place(m: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            m.swap(i * n + j, j * n + i);
        }
    }
}

/// Householder reduction; returns diagonal and off-diagonal (last entry 0).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let norm = (k + 1..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>().sqrt();
        d[k] = a[k * n + k];
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for (t, i) in (k + 1..n).enumerate() {
            v[t] = a[i * n + k];
        }
        v[0] -= alpha;
        let vnorm = v[..m].iter().map(|x| x * x).sum::<f64>().sqrt();
        e[k] = alpha;
        if vnorm == 0.0 {
            continue;
        }
        v[..m].iter_mut().for_each(|x| *x /= vnorm);
        // p = A22 v, q = p - (vᵀp) v, A22 -= 2 (v qᵀ + q vᵀ)
        for (r, i) in (k + 1..n).enumerate() {
            let row = &a[i * n + k + 1..i * n + n];
            p[r] = row.iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
        }
        let kp: f64 = p[..m].iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
        for r in 0..m {
            p[r] -= kp * v[r];
        }
        for (r, i) in (k + 1..n).enumerate() {
            let (vr, pr) = (v[r], p[r]);
            let row = &mut a[i * n + k + 1..i * n + n];
            for (c, x) in row.iter_mut().enumerate() {
                *x -= 2.0 * (vr * p[c] + pr * v[c]);
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        d[n - 1] = a[(n - 1) * n + n - 1];
        e[n - 2] = a[(n - 1) * n + n - 2];
    } else if n == 1 {
        d[0] = a[0];
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; `e[i]` couples
/// `i` and `i + 1`. Eigenvalues are left in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<(), EigenError> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(EigenError::DenseNoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_pencil() {
        let s = SparseSymMatrix::from_diagonal(&[2.0, 3.0]);
        let b = SparseSymMatrix::from_diagonal(&[1.0, 2.0]);
        let spec = dense_eig_oracle(&s, &b).unwrap();
        assert_eq!(spec.values().len(), 2);
        assert!((spec.values()[0] - 1.5).abs() < 1e-14);
        assert!((spec.values()[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_pencil_is_all_ones() {
        let id = SparseSymMatrix::identity(7);
        let spec = dense_eig_oracle(&id, &id).unwrap();
        assert_eq!(spec.values().len(), 1);
        assert!((spec.values()[0] - 1.0).abs() < 1e-14);
        assert_eq!(spec.multiplicities(), &[7]);
    }

    #[test]
    fn path_laplacian_closed_form() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSymMatrix::from_triplets(n, t);
        let eig = generalized_eigenvalues(a.to_dense(), SparseSymMatrix::identity(n).to_dense(), n).unwrap();
        for (k, v) in eig.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-12, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let s = SparseSymMatrix::identity(2);
        let b = SparseSymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(dense_eig_oracle(&s, &b), Err(EigenError::NotPositiveDefinite { index: 1 })));
    }

    #[test]
    fn budget_is_enforced() {
        let id = SparseSymMatrix::identity(DENSE_DIM_LIMIT + 1);
        assert!(matches!(dense_eig_oracle(&id, &id), Err(EigenError::DimensionBudget { .. })));
    }
}
