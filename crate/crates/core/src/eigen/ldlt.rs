//! Sparse `L D Lᵀ` factorization of linear combinations of symmetric matrices.
//!
//! The pattern of `Σ cᵢ Aᵢ` does not depend on the coefficients, so ordering,
//! elimination tree and column counts are computed once in
//! [`SymbolicPencil::new`] and every shift only pays for the numeric phase.
//! No pivoting is done: this is the classical Sturm-sequence factorization,
//! and by Sylvester's law of inertia the signs of `D` count the eigenvalues of
//! the pencil on either side of the shift. A pivot that collapses to roundoff
//! level is reported as a singular shift instead of being trusted.
//!
//! The numeric phase is the up-looking row algorithm of Davis' LDL package.

use super::ordering::{nested_dissection, Graph};
use crate::sparse::SparseSymMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("singular shift: pivot {pivot:.3e} at elimination step {step} (relative scale {scale:.3e})")]
    Singular { step: usize, pivot: f64, scale: f64 },
    #[error("coefficient count {got} does not match the {expected} matrices of the pencil")]
    Coefficients { expected: usize, got: usize },
}

/// Counts of negative, zero and positive pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Ordering and symbolic factorization shared by all shifts of a pencil.
#[derive(Debug, Clone)]
pub struct SymbolicPencil {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// Upper pattern of the permuted matrix by column (== lower by row).
    a_ptr: Vec<usize>,
    a_idx: Vec<usize>,
    /// For each input matrix, the slot in `a_idx` of each of its stored entries.
    scatter: Vec<Vec<usize>>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SymbolicPencil {
    pub fn new(terms: &[&SparseSymMatrix]) -> Self {
        assert!(!terms.is_empty());
        let n = terms[0].dim();
        assert!(terms.iter().all(|m| m.dim() == n), "pencil matrices must share a dimension");

        let edges = terms.iter().flat_map(|m| {
            (0..n).flat_map(move |i| {
                let (cols, _) = m.row(i);
                cols.iter().filter(move |&&j| j != i).map(move |&j| (i, j))
            })
        });
        let mut edges: Vec<(usize, usize)> = edges.collect();
        edges.sort_unstable();
        edges.dedup();
        let graph = Graph::from_edges(n, edges);
        let perm = nested_dissection(&graph);
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }

        // permuted pattern, column k holds rows i <= k
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for m in terms {
            for i in 0..n {
                let (c, _) = m.row(i);
                for &j in c {
                    let (a, b) = (pinv[i], pinv[j]);
                    let (row, col) = if a <= b { (a, b) } else { (b, a) };
                    cols[col].push(row);
                }
            }
        }
        let mut a_ptr = vec![0usize; n + 1];
        for (k, c) in cols.iter_mut().enumerate() {
            c.sort_unstable();
            c.dedup();
            if c.last() != Some(&k) {
                // keep the diagonal structurally present
                c.push(k);
            }
            a_ptr[k + 1] = a_ptr[k] + c.len();
        }
        let a_idx: Vec<usize> = cols.iter().flatten().copied().collect();
        let scatter = terms
            .iter()
            .map(|m| {
                let mut s = Vec::with_capacity(m.nnz());
                for i in 0..n {
                    let (c, _) = m.row(i);
                    for &j in c {
                        let (a, b) = (pinv[i], pinv[j]);
                        let (row, col) = if a <= b { (a, b) } else { (b, a) };
                        let slice = &a_idx[a_ptr[col]..a_ptr[col + 1]];
                        let off = slice.binary_search(&row).expect("entry in pattern");
                        s.push(a_ptr[col] + off);
                    }
                }
                s
            })
            .collect();

        // elimination tree and column counts
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &a_idx[a_ptr[k]..a_ptr[k + 1]] {
                let mut i = i0;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_ptr[k + 1] = l_ptr[k] + lnz[k];
        }
        Self {
            n,
            perm,
            a_ptr,
            a_idx,
            scatter,
            parent,
            l_ptr,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of strictly-lower entries in `L`.
    pub fn factor_nnz(&self) -> usize {
        self.l_ptr[self.n]
    }

    /// Factors `Σ coeffs[i]·terms[i]`; `terms` must be the matrices the
    /// symbolic analysis was built from, in the same order.
    pub fn factor(&self, terms: &[&SparseSymMatrix], coeffs: &[f64]) -> Result<LdlFactor, FactorError> {
        if coeffs.len() != self.scatter.len() || terms.len() != self.scatter.len() {
            return Err(FactorError::Coefficients {
                expected: self.scatter.len(),
                got: coeffs.len().min(terms.len()),
            });
        }
        let n = self.n;
        let mut ax = vec![0.0; self.a_idx.len()];
        for ((m, &c), slots) in terms.iter().zip(coeffs).zip(&self.scatter) {
            debug_assert_eq!(m.nnz(), slots.len());
            for (&v, &slot) in m.values().iter().zip(slots) {
                ax[slot] += c * v;
            }
        }
        let mut scale = 0.0f64;
        for k in 0..n {
            let last = self.a_ptr[k + 1] - 1;
            scale = scale.max(ax[last].abs());
        }
        if scale == 0.0 {
            scale = 1.0;
        }
        let tiny = scale * 1e-14;

        let nnz = self.factor_nnz();
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            let range = self.a_ptr[k]..self.a_ptr[k + 1];
            for (&i0, &a) in self.a_idx[range.clone()].iter().zip(&ax[range]) {
                let mut i = i0;
                y[i] += a;
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern[top];
                top += 1;
                let yi = y[i];
                y[i] = 0.0;
                let start = self.l_ptr[i];
                let end = start + lnz[i];
                let mut dk = d[k];
                for p in start..end {
                    y[li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                dk -= lki * yi;
                d[k] = dk;
                li[end] = k;
                lx[end] = lki;
                lnz[i] += 1;
            }
            if !(d[k].abs() > tiny) {
                return Err(FactorError::Singular {
                    step: k,
                    pivot: d[k],
                    scale,
                });
            }
        }
        Ok(LdlFactor {
            perm: self.perm.clone(),
            l_ptr: self.l_ptr.clone(),
            li,
            lx,
            d,
        })
    }
}

/// Numeric factor `P A Pᵀ = L D Lᵀ`.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    perm: Vec<usize>,
    l_ptr: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    pub fn inertia(&self) -> Inertia {
        let mut out = Inertia {
            negative: 0,
            zero: 0,
            positive: 0,
        };
        for &v in &self.d {
            if v < 0.0 {
                out.negative += 1;
            } else if v > 0.0 {
                out.positive += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.d.len();
        work.clear();
        work.extend(self.perm.iter().map(|&old| b[old]));
        let x = work.as_mut_slice();
        for j in 0..n {
            let xj = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                acc -= self.lx[p] * x[self.li[p]];
            }
            x[j] = acc;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut work = Vec::new();
        self.solve_in_place(&mut x, &mut work);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSymMatrix::from_triplets(n, t)
    }

    #[test]
    fn solve_reproduces_rhs() {
        let a = laplacian_1d(200);
        let id = SparseSymMatrix::identity(200);
        let sym = SymbolicPencil::new(&[&a, &id]);
        let f = sym.factor(&[&a, &id], &[1.0, -0.7]).unwrap();
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = f.solve(&b);
        let shifted = SparseSymMatrix::linear_combination(&[(1.0, &a), (-0.7, &id)]);
        let r = shifted.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        // eigenvalues of the 1-D Dirichlet Laplacian: 2 - 2cos(kπ/(n+1))
        let n = 50;
        let a = laplacian_1d(n);
        let id = SparseSymMatrix::identity(n);
        let sym = SymbolicPencil::new(&[&a, &id]);
        for &sigma in &[0.05, 0.5, 1.3, 2.9, 3.99] {
            let expected = (1..=n)
                .filter(|&k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < sigma)
                .count();
            let f = sym.factor(&[&a, &id], &[1.0, -sigma]).unwrap();
            assert_eq!(f.inertia().negative, expected, "shift {sigma}");
        }
    }

    #[test]
    fn exact_singularity_is_reported() {
        let a = SparseSymMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let sym = SymbolicPencil::new(&[&a]);
        assert!(matches!(sym.factor(&[&a], &[1.0]), Err(FactorError::Singular { .. })));
    }
}
