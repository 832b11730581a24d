//! Branch eigenvalues of the coupled problem as fixed points of the Robin
//! curves.
//!
//! With `μ(λ) = λqr/(q − λ)` the Robin eigenvalues `λ_k(μ)` of `(K − μG̃, M)`
//! are nonincreasing in `μ` and `μ` increases on both sides of the pole, so
//! `λ ↦ λ_k(μ(λ)) − λ` is strictly decreasing on `(0, q)` and on `(q, ∞)`.
//! By Sylvester's law the negative inertia of `K − μ(λ)G̃ − λM` counts the
//! `k` with `λ_k(μ(λ)) < λ`, so on each branch the count is a nondecreasing
//! step function whose jumps are exactly the fixed points. Bisection on the
//! count brackets every root at once, without tracking individual curves.

use super::LimitError;
use crate::eigen::ldlt::{FactorError, SymbolicPencil};
use crate::eigen::spectrum::{SpectralTag, Spectrum};
use crate::sparse::SparseSymMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEigenvalue {
    /// Curve index, 1-based. Minus-branch indices start at `k0 + 1`.
    pub k: usize,
    pub branch: Branch,
    pub lambda: f64,
    pub mu_at_solution: f64,
    pub bisection_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Bracket width, relative to `max(1, q)`.
    pub width_tol: f64,
    /// Largest `J` in the probes `q(1 − 2⁻ᴶ)` and `q(1 + 2⁻ᴶ)`.
    pub max_pole_doublings: u32,
    /// Minus-branch brackets extend to `Λ(1 + cap_margin)`.
    pub cap_margin: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            width_tol: 1e-9,
            max_pole_doublings: 40,
            cap_margin: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub branches: Vec<BranchEigenvalue>,
    pub k0: usize,
    /// Roots that could not be resolved, and other notes.
    pub diagnostics: Vec<String>,
}

impl FixedPointResult {
    pub fn plus(&self) -> impl Iterator<Item = &BranchEigenvalue> {
        self.branches.iter().filter(|b| b.branch == Branch::Plus)
    }

    pub fn minus(&self) -> impl Iterator<Item = &BranchEigenvalue> {
        self.branches.iter().filter(|b| b.branch == Branch::Minus)
    }

    /// Roots in `[0, Λ]` as a spectrum tagged by branch; the bracket width
    /// is stored as the residual.
    pub fn spectrum(&self, lambda_max: f64) -> Spectrum {
        let mut spec = Spectrum::empty();
        for b in self.branches.iter().filter(|b| b.lambda <= lambda_max) {
            let tag = match b.branch {
                Branch::Plus => SpectralTag::BranchPlus,
                Branch::Minus => SpectralTag::BranchMinus,
            };
            spec.insert_tagged(b.lambda, Some(tag), b.bisection_width);
        }
        spec
    }
}

pub(super) struct RobinFamily<'a> {
    pub symbolic: &'a SymbolicPencil,
    /// `[K, G̃, M]`
    pub terms: [&'a SparseSymMatrix; 3],
    pub gamma_dofs: usize,
}

struct Counter<'a> {
    family: &'a RobinFamily<'a>,
    q: f64,
    r: f64,
    evaluations: usize,
}

impl Counter<'_> {
    fn mu(&self, lambda: f64) -> f64 {
        lambda * self.q * self.r / (self.q - lambda)
    }

    fn raw(&mut self, lambda: f64) -> Result<usize, FactorError> {
        self.evaluations += 1;
        let f = self
            .family
            .symbolic
            .factor(&self.family.terms, &[1.0, -self.mu(lambda), -lambda])?;
        Ok(f.inertia().negative)
    }

    /// Count at `lambda`, moved by a relative `10⁻¹³…10⁻¹⁰` when the
    /// factorization breaks down. Returns the point actually used.
    fn count(&mut self, lambda: f64) -> Result<(f64, usize), FactorError> {
        let mut last = None;
        for attempt in 0..8 {
            let step = 1e-13 * lambda.abs().max(1.0) * f64::powi(10.0, attempt / 2);
            let x = match attempt {
                0 => lambda,
                a if a % 2 == 1 => lambda + step,
                _ => lambda - step,
            };
            match self.raw(x) {
                Ok(c) => return Ok((x, c)),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap())
    }
}

/// Root locations (one entry per unit jump) with their final bracket width.
fn bisect_jumps(
    counter: &mut Counter<'_>,
    (a, ca): (f64, usize),
    (b, cb): (f64, usize),
    width: f64,
    out: &mut Vec<(f64, f64)>,
) -> Result<(), FactorError> {
    if cb <= ca {
        return Ok(());
    }
    if b - a <= width {
        let mid = 0.5 * (a + b);
        out.extend(std::iter::repeat_n((mid, b - a), cb - ca));
        return Ok(());
    }
    let (m, cm) = counter.count(0.5 * (a + b))?;
    // a nudge can only leave the midpoint by ~1e-10 relative, far inside (a, b)
    let cm = cm.clamp(ca, cb);
    bisect_jumps(counter, (a, ca), (m, cm), width, out)?;
    bisect_jumps(counter, (m, cm), (b, cb), width, out)
}

pub(super) fn solve(
    family: &RobinFamily<'_>,
    q: f64,
    r: f64,
    lambda_max: f64,
    k0: usize,
    opts: &FixedPointOptions,
) -> Result<FixedPointResult, LimitError> {
    if !(lambda_max > 0.0) || !(opts.width_tol > 0.0) || !(opts.cap_margin >= 0.0) {
        return Err(LimitError::InvalidArgument(format!(
            "fixed point needs Λ > 0, width_tol > 0, cap_margin >= 0 (got {lambda_max}, {}, {})",
            opts.width_tol, opts.cap_margin
        )));
    }
    let mut counter = Counter {
        family,
        q,
        r,
        evaluations: 0,
    };
    let singular = |lambda: f64, e: FactorError| {
        LimitError::Eigen(crate::eigen::EigenError::Factorization { shift: lambda, source: e })
    };
    let width = opts.width_tol * q.max(1.0);
    let mut diagnostics = Vec::new();
    let mut branches = Vec::new();

    // Plus branch. At λ = 0 the constant is a Robin eigenfunction with
    // eigenvalue 0, so the first root is exactly 0.
    let start = 1e-8 * q.max(1.0);
    let lo = counter.count(start).map_err(|e| singular(start, e))?;
    if lo.1 == 0 {
        diagnostics.push(format!("no Robin eigenvalue below {start:e}; the kernel of K is missing"));
    }
    let expected_plus = family.gamma_dofs + k0;
    let mut hi = lo;
    for j in 1..=opts.max_pole_doublings {
        let x = q * (1.0 - f64::powi(2.0, -(j as i32)));
        if x <= lo.0 {
            continue;
        }
        hi = counter.count(x).map_err(|e| singular(x, e))?;
        if hi.1 >= expected_plus {
            break;
        }
    }
    if hi.1 < expected_plus {
        diagnostics.push(format!(
            "plus branch: {} of {expected_plus} roots lie within q·2^-{} of q and were skipped",
            expected_plus - hi.1,
            opts.max_pole_doublings
        ));
    }
    let mut plus = Vec::new();
    if lo.1 > 0 {
        plus.push((0.0, 0.0));
        // further roots below `start` are resolved on (0, start]
        bisect_jumps(&mut counter, (0.0, 1), lo, width, &mut plus).map_err(|e| singular(start, e))?;
    }
    bisect_jumps(&mut counter, lo, hi, width, &mut plus).map_err(|e| singular(lo.0, e))?;
    for (i, (lambda, w)) in plus.into_iter().enumerate() {
        if lambda > lambda_max {
            break;
        }
        branches.push(BranchEigenvalue {
            k: i + 1,
            branch: Branch::Plus,
            lambda,
            mu_at_solution: counter.mu(lambda),
            bisection_width: w,
        });
    }

    // Minus branch on (q, Λ_cap]; just above the pole the count equals k0.
    let cap = lambda_max * (1.0 + opts.cap_margin);
    if cap > q {
        let mut base = None;
        for j in (1..=opts.max_pole_doublings).rev() {
            let x = q * (1.0 + f64::powi(2.0, -(j as i32)));
            if x >= cap {
                continue;
            }
            let (x, c) = counter.count(x).map_err(|e| singular(x, e))?;
            if c == k0 {
                base = Some((x, c));
                break;
            }
            diagnostics.push(format!("minus branch: count {c} at {x:e} differs from k0 = {k0}; trying farther from q"));
        }
        match base {
            Some(base) => {
                let top = counter.count(cap).map_err(|e| singular(cap, e))?;
                let mut minus = Vec::new();
                bisect_jumps(&mut counter, base, top, width, &mut minus).map_err(|e| singular(base.0, e))?;
                for (j, (lambda, w)) in minus.into_iter().enumerate() {
                    if lambda > lambda_max {
                        break;
                    }
                    branches.push(BranchEigenvalue {
                        k: k0 + j + 1,
                        branch: Branch::Minus,
                        lambda,
                        mu_at_solution: counter.mu(lambda),
                        bisection_width: w,
                    });
                }
            }
            None => diagnostics.push("minus branch: no probe above q reproduced k0; branch skipped".into()),
        }
    }
    diagnostics.push(format!("{} inertia evaluations", counter.evaluations));
    Ok(FixedPointResult {
        branches,
        k0,
        diagnostics,
    })
}
