//! Compressed symmetric sparse storage.
//!
//! Only the lower triangle (diagonal included) is kept, row-compressed with
//! sorted column indices. Every consumer that needs the full operator goes
//! through [`SparseSymMatrix::mul_vec`] or [`SparseSymMatrix::for_each_full`],
//! which expand the symmetric half in a fixed order.

use std::io::{self, Write};

/// Symmetric sparse matrix holding its lower triangle in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds a matrix from `(row, col, value)` contributions.
    ///
    /// Entries are folded onto the lower triangle and duplicates are summed
    /// in insertion order, so the result is deterministic for a fixed input
    /// sequence.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(i, j, v)| {
                assert!(i < dim && j < dim, "triplet ({i}, {j}) outside dimension {dim}");
                if i >= j {
                    (i, j, v)
                } else {
                    (j, i, v)
                }
            })
            .collect();
        // stable: equal keys keep insertion order for the summation below
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (lower-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored lower-triangle row `i`: column indices `<= i` and values.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Visits every entry of the full symmetric matrix, mirrored entries
    /// right after their stored counterpart.
    pub fn for_each_full(&self, mut f: impl FnMut(usize, usize, f64)) {
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                f(i, j, v);
                if i != j {
                    f(j, i, v);
                }
            }
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            let xi = x[i];
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// Maximum absolute column sum of the full matrix.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.dim];
        self.for_each_full(|_, j, v| col[j] += v.abs());
        col.into_iter().fold(0.0, f64::max)
    }

    /// `Σ cᵢ Aᵢ` over matrices of equal dimension; the result carries the
    /// union sparsity pattern.
    pub fn linear_combination(terms: &[(f64, &SparseSymMatrix)]) -> Self {
        let dim = terms.first().map_or(0, |(_, m)| m.dim);
        let mut trip = Vec::new();
        for &(c, m) in terms {
            assert_eq!(m.dim, dim, "dimension mismatch in linear combination");
            for i in 0..m.dim {
                let (cols, vals) = m.row(i);
                trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, c * v)));
            }
        }
        Self::from_triplets(dim, trip)
    }

    /// Principal submatrix on the rows/columns listed in `keep` (in that order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for i in 0..self.dim {
            if map[i] == usize::MAX {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if map[j] != usize::MAX {
                    trip.push((map[i], map[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), trip)
    }

    /// Embeds this matrix into a `dim × dim` matrix, sending local index `a`
    /// to `targets[a]`.
    pub fn embed(&self, dim: usize, targets: &[usize]) -> Self {
        assert_eq!(targets.len(), self.dim);
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (targets[i], targets[j], v)));
        }
        Self::from_triplets(dim, trip)
    }

    /// Dense row-major copy; meant for tests and small oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut d = vec![0.0; n * n];
        self.for_each_full(|i, j, v| d[i * n + j] = v);
        d
    }

    /// Coordinate text dump, one `row col value` line per stored
    /// lower-triangle entry, values with 17 significant digits.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseSymMatrix {
        SparseSymMatrix::from_triplets(
            3,
            vec![(0, 0, 2.0), (1, 0, -1.0), (0, 1, -0.5), (1, 1, 3.0), (2, 2, 1.0), (2, 1, 0.25)],
        )
    }

    #[test]
    fn duplicates_fold_onto_lower_triangle() {
        let a = sample();
        assert_eq!(a.get(1, 0), -1.5);
        assert_eq!(a.get(0, 1), -1.5);
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(2, 0), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = sample();
        let d = a.to_dense();
        let x = [1.0, -2.0, 0.5];
        let y = a.mul_vec(&x);
        for i in 0..3 {
            let expect: f64 = (0..3).map(|j| d[i * 3 + j] * x[j]).sum();
            assert!((y[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn norm1_is_max_column_sum() {
        assert_eq!(sample().norm1(), 1.5 + 3.0 + 0.25);
    }

    #[test]
    fn submatrix_and_embed_are_inverse() {
        let a = sample();
        let sub = a.principal_submatrix(&[0, 2]);
        assert_eq!(sub.dim(), 2);
        assert_eq!(sub.get(0, 0), 2.0);
        assert_eq!(sub.get(1, 1), 1.0);
        let back = sub.embed(3, &[0, 2]);
        assert_eq!(back.get(2, 2), 1.0);
        assert_eq!(back.get(1, 1), 0.0);
    }

    #[test]
    fn coo_dump_has_seventeen_digits() {
        let a = SparseSymMatrix::from_diagonal(&[1.0 / 3.0]);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim(), "0 0 3.3333333333333331e-1");
        let parsed: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, 1.0 / 3.0);
    }
}
