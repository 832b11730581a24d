//! Sparse symmetric generalized eigenproblems `S u = λ B u`.
//!
//! Every interval solve is certified by Sylvester inertia: the number of
//! eigenvalues below a shift is the number of negative pivots of `S − σB`.
//! The interval is bisected on those counts until each slice holds at most
//! `block_size` eigenvalues; each slice is then resolved by shift-invert
//! subspace iteration with Rayleigh–Ritz extraction around the slice centre.

pub mod dense;
pub mod ldlt;
pub mod ordering;
pub mod spectrum;

use crate::sparse::SparseSymMatrix;
use ldlt::{FactorError, LdlFactor, SymbolicPencil};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spectrum::Spectrum;
use thiserror::Error;

pub use dense::dense_eig_oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("pencil matrices have dimensions {s} and {b}")]
    DimensionMismatch { s: usize, b: usize },
    #[error("factorization of S - sigma B failed at sigma = {shift}: {source}")]
    Factorization {
        shift: f64,
        #[source]
        source: FactorError,
    },
    #[error("no convergence on slice [{lo}, {hi}] after {iterations} iterations (worst relative residual {worst_residual:.3e})")]
    NoConvergence {
        lo: f64,
        hi: f64,
        iterations: usize,
        worst_residual: f64,
    },
    #[error("certification failed on [{lo}, {hi}]: inertia counts {expected} eigenvalues, solver returned {found}")]
    Certification {
        lo: f64,
        hi: f64,
        expected: usize,
        found: usize,
    },
    #[error("could not bracket the {k} smallest eigenvalues")]
    Bracket { k: usize },
    #[error("mass matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },
    #[error("dimension {dim} exceeds the dense budget {limit}")]
    DimensionBudget { dim: usize, limit: usize },
    #[error("dense QL iteration did not converge for eigenvalue {index}")]
    DenseNoConvergence { index: usize },
}

/// Solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigSolveOptions {
    /// Relative residual bound `‖Su − λBu‖ ≤ tol·(‖S‖₁ + |λ|‖B‖₁)·‖u‖`.
    pub tolerance: f64,
    /// Subspace iterations per slice.
    pub max_iterations: usize,
    /// Maximum eigenvalue count per slice.
    pub block_size: usize,
    /// Extra subspace vectors beyond twice the slice count.
    pub guard_vectors: usize,
    /// Halvings spent recentring a slice on its eigenvalues.
    pub max_shrink_steps: usize,
    pub seed: u64,
}

impl Default for EigSolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 300,
            block_size: 8,
            guard_vectors: 8,
            max_shrink_steps: 8,
            seed: 0x5eed_c0de,
        }
    }
}

impl EigSolveOptions {
    pub fn validate(&self) -> Result<(), EigenError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1e-3) {
            return Err(EigenError::InvalidOptions(format!(
                "tolerance {} outside (0, 1e-3)",
                self.tolerance
            )));
        }
        if self.block_size == 0 {
            return Err(EigenError::InvalidOptions("block_size must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(EigenError::InvalidOptions("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Eigenpairs in ascending order, repeated according to multiplicity.
#[derive(Debug, Clone, Default)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Relative residual of each pair.
    pub residuals: Vec<f64>,
    /// Inertia count of the solved interval.
    pub certified_count: usize,
}

impl EigenSolution {
    pub fn spectrum(&self) -> Spectrum {
        Spectrum::from_values(self.values.iter().copied().zip(self.residuals.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A pencil `(S, B)` with its symbolic factorization cached across shifts.
pub struct Pencil<'a> {
    s: &'a SparseSymMatrix,
    b: &'a SparseSymMatrix,
    symbolic: SymbolicPencil,
    norm_s: f64,
    norm_b: f64,
    opts: EigSolveOptions,
}

impl<'a> Pencil<'a> {
    pub fn new(s: &'a SparseSymMatrix, b: &'a SparseSymMatrix, opts: EigSolveOptions) -> Result<Self, EigenError> {
        opts.validate()?;
        if s.dim() != b.dim() {
            return Err(EigenError::DimensionMismatch { s: s.dim(), b: b.dim() });
        }
        Ok(Self {
            s,
            b,
            symbolic: SymbolicPencil::new(&[s, b]),
            norm_s: s.norm1(),
            norm_b: b.norm1(),
            opts,
        })
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn options(&self) -> &EigSolveOptions {
        &self.opts
    }

    /// Strictly-lower-triangular entries of the cached factor pattern.
    pub fn factor_nnz(&self) -> usize {
        self.symbolic.factor_nnz()
    }

    pub fn factor_at(&self, shift: f64) -> Result<LdlFactor, EigenError> {
        self.symbolic
            .factor(&[self.s, self.b], &[1.0, -shift])
            .map_err(|source| EigenError::Factorization { shift, source })
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> Result<usize, EigenError> {
        Ok(self.factor_at(lambda)?.inertia().negative)
    }

    /// Count at `shift`, moving it by a tiny amount when it hits an eigenvalue.
    /// Returns the shift actually used.
    fn count_nudged(&self, shift: f64) -> Result<(f64, usize), EigenError> {
        let mut last = None;
        for attempt in 0..8 {
            let step = 1e-10 * shift.abs().max(1.0) * f64::powi(10.0, attempt / 2);
            let s = match attempt {
                0 => shift,
                a if a % 2 == 1 => shift + step,
                _ => shift - step,
            };
            match self.count_below(s) {
                Ok(c) => return Ok((s, c)),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap())
    }

    /// Every eigenvalue in `[lo, hi]` with eigenvectors, certified by inertia.
    pub fn eigs_in_interval(&self, lo: f64, hi: f64) -> Result<EigenSolution, EigenError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(EigenError::InvalidInterval { lo, hi });
        }
        let (lo, clo) = self.count_nudged(lo)?;
        let (hi, chi) = self.count_nudged(hi)?;
        let expected = chi.saturating_sub(clo);
        let mut leaves = Vec::new();
        self.slice(Slice { lo, clo, hi, chi }, &mut leaves)?;

        let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(expected);
        for leaf in leaves {
            let leaf = self.shrink(leaf)?;
            pairs.extend(self.solve_slice(&leaf)?);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.len() > 1 && pairs.len() <= POLISH_LIMIT {
            pairs = self.polish(pairs, lo, hi);
        }
        if pairs.len() != expected {
            return Err(EigenError::Certification {
                lo,
                hi,
                expected,
                found: pairs.len(),
            });
        }
        let mut out = EigenSolution {
            certified_count: expected,
            ..Default::default()
        };
        for (v, x, r) in pairs {
            out.values.push(v);
            out.vectors.push(x);
            out.residuals.push(r);
        }
        Ok(out)
    }

    /// The `k` smallest eigenpairs.
    pub fn eigs_smallest(&self, k: usize) -> Result<EigenSolution, EigenError> {
        let n = self.dim();
        if k == 0 || k > n {
            return Err(EigenError::Bracket { k });
        }
        // lower end: no eigenvalue below
        let mut lo = -1.0;
        let mut found = false;
        for _ in 0..80 {
            let (s, c) = self.count_nudged(lo)?;
            lo = s;
            if c == 0 {
                found = true;
                break;
            }
            lo = 4.0 * lo - 1.0;
        }
        if !found {
            return Err(EigenError::Bracket { k });
        }
        // upper end: at least k below, then pull it down towards the k-th
        let mut below = lo;
        let mut hi = 1.0f64.max(lo + 1.0);
        let mut chi = 0;
        found = false;
        for _ in 0..80 {
            let (s, c) = self.count_nudged(hi)?;
            hi = s;
            chi = c;
            if c >= k {
                found = true;
                break;
            }
            below = hi;
            hi = 4.0 * hi + 1.0;
        }
        if !found {
            return Err(EigenError::Bracket { k });
        }
        let slack = self.opts.block_size;
        while chi > k + slack && hi - below > 1e-12 * hi.abs().max(1.0) {
            let mid = 0.5 * (below + hi);
            let (s, c) = self.count_nudged(mid)?;
            if c >= k {
                hi = s;
                chi = c;
            } else {
                below = s;
            }
        }
        let mut sol = self.eigs_in_interval(lo, hi)?;
        sol.values.truncate(k);
        sol.vectors.truncate(k);
        sol.residuals.truncate(k);
        Ok(sol)
    }

    fn slice(&self, s: Slice, leaves: &mut Vec<Slice>) -> Result<(), EigenError> {
        let c = s.count();
        if c == 0 {
            return Ok(());
        }
        let width_floor = 1e-12 * s.lo.abs().max(s.hi.abs()).max(1.0);
        if c <= self.opts.block_size || s.hi - s.lo <= width_floor {
            leaves.push(s);
            return Ok(());
        }
        let (mid, cmid) = self.count_nudged(0.5 * (s.lo + s.hi))?;
        self.slice(
            Slice {
                lo: s.lo,
                clo: s.clo,
                hi: mid,
                chi: cmid,
            },
            leaves,
        )?;
        self.slice(
            Slice {
                lo: mid,
                clo: cmid,
                hi: s.hi,
                chi: s.chi,
            },
            leaves,
        )
    }

    /// Halves a slice while all its eigenvalues sit in one half, so the
    /// shift lands close to them.
    fn shrink(&self, mut s: Slice) -> Result<Slice, EigenError> {
        for _ in 0..self.opts.max_shrink_steps {
            if s.hi - s.lo <= 1e-9 * s.lo.abs().max(s.hi.abs()).max(1.0) {
                break;
            }
            let (mid, cmid) = self.count_nudged(0.5 * (s.lo + s.hi))?;
            if cmid == s.clo {
                s.lo = mid;
            } else if cmid == s.chi {
                s.hi = mid;
            } else {
                break;
            }
        }
        Ok(s)
    }

    fn relative_residual(&self, lambda: f64, sx: &[f64], bx: &[f64], x: &[f64]) -> f64 {
        let r = sx.iter().zip(bx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let scale = (self.norm_s + lambda.abs() * self.norm_b) * norm(x);
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    }

    /// Shift-invert subspace iteration for the eigenvalues of one slice.
    fn solve_slice(&self, s: &Slice) -> Result<Vec<(f64, Vec<f64>, f64)>, EigenError> {
        let n = self.dim();
        let c = s.count();
        let p = (2 * c + self.opts.guard_vectors).min(n);
        let sigma = 0.5 * (s.lo + s.hi);
        let factor = match self.factor_at(sigma) {
            Ok(f) => f,
            Err(_) => self.factor_at(sigma + 1e-7 * (s.hi - s.lo))?,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed ^ s.lo.to_bits().rotate_left(21) ^ s.hi.to_bits());
        let mut x: Vec<Vec<f64>> = (0..p).map(|_| random_vector(&mut rng, n)).collect();
        let mut work = Vec::with_capacity(n);
        let mut worst = f64::INFINITY;

        for _ in 0..self.opts.max_iterations {
            // y = (S − σB)⁻¹ B x
            let mut y: Vec<Vec<f64>> = x
                .iter()
                .map(|xi| {
                    let mut v = self.b.mul_vec(xi);
                    factor.solve_in_place(&mut v, &mut work);
                    v
                })
                .collect();
            self.b_orthonormalize(&mut y, &mut rng);

            let sy: Vec<Vec<f64>> = y.iter().map(|v| self.s.mul_vec(v)).collect();
            let by: Vec<Vec<f64>> = y.iter().map(|v| self.b.mul_vec(v)).collect();
            let m = y.len();
            let mut proj = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in 0..=i {
                    let v = 0.5 * (dot(&y[i], &sy[j]) + dot(&y[j], &sy[i]));
                    proj[(i, j)] = v;
                    proj[(j, i)] = v;
                }
            }
            let eig = SymmetricEigen::new(proj);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

            let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
                let mut out = vec![0.0; n];
                for (i, bi) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(i, col)], bi, &mut out);
                }
                out
            };

            let mut inside = Vec::new();
            worst = 0.0f64;
            let mut next = Vec::with_capacity(m);
            for &col in &order {
                let theta = eig.eigenvalues[col];
                let xv = combine(&y, col);
                if theta >= s.lo && theta <= s.hi {
                    let sx = combine(&sy, col);
                    let bx = combine(&by, col);
                    let res = self.relative_residual(theta, &sx, &bx, &xv);
                    worst = worst.max(res);
                    inside.push((theta, xv.clone(), res));
                }
                next.push(xv);
            }
            if inside.len() == c && worst <= self.opts.tolerance {
                return Ok(inside);
            }
            x = next;
        }
        Err(EigenError::NoConvergence {
            lo: s.lo,
            hi: s.hi,
            iterations: self.opts.max_iterations,
            worst_residual: worst,
        })
    }

    /// Rayleigh–Ritz over the union of all slice vectors. Vectors from
    /// different slices are only orthogonal up to residual/gap; this restores
    /// exact `B`-orthonormality. Falls back to the input if any Ritz value
    /// leaves the interval.
    fn polish(&self, pairs: Vec<(f64, Vec<f64>, f64)>, lo: f64, hi: f64) -> Vec<(f64, Vec<f64>, f64)> {
        let n = self.dim();
        let mut y: Vec<Vec<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        self.b_orthonormalize(&mut y, &mut rng);
        let m = y.len();
        let sy: Vec<Vec<f64>> = y.iter().map(|v| self.s.mul_vec(v)).collect();
        let mut proj = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = 0.5 * (dot(&y[i], &sy[j]) + dot(&y[j], &sy[i]));
                proj[(i, j)] = v;
                proj[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut out = Vec::with_capacity(m);
        for &col in &order {
            let theta = eig.eigenvalues[col];
            if theta < lo || theta > hi {
                return pairs;
            }
            let mut x = vec![0.0; n];
            let mut sx = vec![0.0; n];
            for i in 0..m {
                axpy(eig.eigenvectors[(i, col)], &y[i], &mut x);
                axpy(eig.eigenvectors[(i, col)], &sy[i], &mut sx);
            }
            let bx = self.b.mul_vec(&x);
            let res = self.relative_residual(theta, &sx, &bx, &x);
            if res > self.opts.tolerance {
                return pairs;
            }
            out.push((theta, x, res));
        }
        out
    }

    /// Modified Gram–Schmidt in the `B` inner product, two passes; a column
    /// that collapses is replaced by a fresh random vector.
    fn b_orthonormalize(&self, y: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
        let n = self.dim();
        let mut by: Vec<Vec<f64>> = Vec::with_capacity(y.len());
        for j in 0..y.len() {
            let mut restarts = 0;
            loop {
                let start = self.b_norm(&y[j]);
                if start > 0.0 {
                    scale(&mut y[j], 1.0 / start);
                }
                for _ in 0..2 {
                    for i in 0..j {
                        let coef = dot(&by[i], &y[j]);
                        let (head, tail) = y.split_at_mut(j);
                        axpy(-coef, &head[i], &mut tail[0]);
                    }
                }
                let bj = self.b.mul_vec(&y[j]);
                let nrm = dot(&y[j], &bj).max(0.0).sqrt();
                if start > 0.0 && nrm > 1e-8 || restarts >= 3 {
                    let inv = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
                    scale(&mut y[j], inv);
                    by.push(bj.into_iter().map(|v| v * inv).collect());
                    break;
                }
                y[j] = random_vector(rng, n);
                restarts += 1;
            }
        }
    }

    fn b_norm(&self, v: &[f64]) -> f64 {
        self.b.quad_form(v).max(0.0).sqrt()
    }
}

/// Largest eigenvector count for the final joint Rayleigh–Ritz pass.
const POLISH_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy)]
struct Slice {
    lo: f64,
    clo: usize,
    hi: f64,
    chi: usize,
}

impl Slice {
    fn count(&self) -> usize {
        self.chi.saturating_sub(self.clo)
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(x: &mut [f64], alpha: f64) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Number of eigenvalues of `(S, B)` strictly below `lambda`.
pub fn count_below(s: &SparseSymMatrix, b: &SparseSymMatrix, lambda: f64) -> Result<usize, EigenError> {
    Pencil::new(s, b, EigSolveOptions::default())?.count_below(lambda)
}

pub fn eigs_in_interval(
    s: &SparseSymMatrix,
    b: &SparseSymMatrix,
    lo: f64,
    hi: f64,
    opts: &EigSolveOptions,
) -> Result<EigenSolution, EigenError> {
    Pencil::new(s, b, opts.clone())?.eigs_in_interval(lo, hi)
}

pub fn eigs_smallest(
    s: &SparseSymMatrix,
    b: &SparseSymMatrix,
    k: usize,
    opts: &EigSolveOptions,
) -> Result<EigenSolution, EigenError> {
    Pencil::new(s, b, opts.clone())?.eigs_smallest(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SparseSymMatrix {
        SparseSymMatrix::from_diagonal(v)
    }

    #[test]
    fn diagonal_count_and_interval() {
        let s = diag(&[1.0, 2.0, 3.0]);
        let id = SparseSymMatrix::identity(3);
        assert_eq!(count_below(&s, &id, 2.5).unwrap(), 2);
        assert_eq!(count_below(&s, &id, -1.0).unwrap(), 0);
        let sol = eigs_in_interval(&s, &id, 1.5, 3.5, &EigSolveOptions::default()).unwrap();
        assert_eq!(sol.certified_count, 2);
        assert!((sol.values[0] - 2.0).abs() < 1e-12);
        assert!((sol.values[1] - 3.0).abs() < 1e-12);
        let empty = eigs_in_interval(&s, &id, 3.5, 4.5, &EigSolveOptions::default()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.certified_count, 0);
    }

    #[test]
    fn diagonal_smallest() {
        let s = diag(&[3.0, 1.0, 2.0]);
        let id = SparseSymMatrix::identity(3);
        let sol = eigs_smallest(&s, &id, 2, &EigSolveOptions::default()).unwrap();
        assert_eq!(sol.values.len(), 2);
        assert!((sol.values[0] - 1.0).abs() < 1e-12);
        assert!((sol.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let opts = EigSolveOptions {
            tolerance: 1e-2,
            ..Default::default()
        };
        assert!(opts.validate().is_err());
    }

    #[test]
    fn path_laplacian_many_slices_and_orthonormal_vectors() {
        let n = 300;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SparseSymMatrix::from_triplets(n, t);
        let b = SparseSymMatrix::from_diagonal(&(0..n).map(|i| 1.0 + 0.5 * (i as f64 / n as f64)).collect::<Vec<_>>());
        let sol = eigs_in_interval(&a, &b, 0.0, 0.2, &EigSolveOptions::default()).unwrap();
        let dense = dense_eig_oracle(&a, &b).unwrap().expanded();
        let expect: Vec<f64> = dense.into_iter().filter(|&v| v <= 0.2).collect();
        assert_eq!(sol.values.len(), expect.len());
        assert!(sol.values.len() > 20);
        for (v, e) in sol.values.iter().zip(&expect) {
            assert!((v - e).abs() <= 1e-8 * e.abs().max(1.0), "{v} vs {e}");
        }
        for i in 0..sol.len() {
            for j in 0..=i {
                let g = b.bilinear(&sol.vectors[i], &sol.vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-8, "gram ({i},{j}) = {g}");
            }
        }
    }
}
