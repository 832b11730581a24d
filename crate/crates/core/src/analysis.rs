//! Spectrum comparison: truncated Hausdorff distance, the low-frequency
//! threshold bound, convergence trends and the CSV/plot writers.

use crate::eigen::spectrum::Spectrum;
use crate::geometry::{PerturbationParams, RegimeClass, ScalingNumbers};
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("{side} spectrum has no values in [{lo}, {hi}]; the distance is undefined")]
    EmptyTruncation { side: &'static str, lo: f64, hi: f64 },
    #[error("threshold check needs {needed} eigenvalues, spectrum has {available}")]
    TooFewEigenvalues { needed: usize, available: usize },
    #[error("invalid convergence rows: {0}")]
    InvalidRows(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, AnalysisError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(AnalysisError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

fn truncate<'a>(values: &'a [f64], l: &Interval) -> &'a [f64] {
    let a = values.partition_point(|&v| v < l.lo);
    let b = values.partition_point(|&v| v <= l.hi);
    &values[a..b]
}

/// `sup_{x∈X} inf_{y∈Y} |x − y|` for sorted nonempty slices.
fn directed(xs: &[f64], ys: &[f64]) -> f64 {
    let mut j = 0;
    let mut worst: f64 = 0.0;
    for &x in xs {
        while j + 1 < ys.len() && ys[j + 1] <= x {
            j += 1;
        }
        let mut d = (x - ys[j]).abs();
        if j + 1 < ys.len() {
            d = d.min((ys[j + 1] - x).abs());
        }
        worst = worst.max(d);
    }
    worst
}

/// Hausdorff distance between sorted finite sets; `None` if either is empty.
pub fn hausdorff_sorted(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.is_empty() || ys.is_empty() {
        return None;
    }
    Some(directed(xs, ys).max(directed(ys, xs)))
}

/// Hausdorff distance of `X ∩ l` and `Y ∩ l`. Multiplicities are ignored.
pub fn hausdorff_distance(x: &Spectrum, y: &Spectrum, l: &Interval) -> Result<f64, AnalysisError> {
    let xs = truncate(x.values(), l);
    let ys = truncate(y.values(), l);
    let empty = |side| AnalysisError::EmptyTruncation {
        side,
        lo: l.lo,
        hi: l.hi,
    };
    if xs.is_empty() {
        return Err(empty("first"));
    }
    if ys.is_empty() {
        return Err(empty("second"));
    }
    Ok(directed(xs, ys).max(directed(ys, xs)))
}

/// Rayleigh quotient of the room-localised test functions,
/// `q_ε / (1 + q_ε·h²/3)` with `h` the passage length.
pub fn threshold_bound(scaling: &ScalingNumbers, params: &PerturbationParams) -> f64 {
    let q = scaling.q_eps;
    q / (1.0 + q * params.h * params.h / 3.0)
}

/// FEM slack for the threshold check: 5% at mesh size 1/64, halved with
/// each halving of the mesh size.
pub fn fem_slack_for_mesh(mesh_size: f64) -> f64 {
    0.05 * mesh_size * 64.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub k: usize,
    pub lambda: f64,
    /// `bound·(1 + slack) − λ_k`; negative on failure.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub bound: f64,
    pub slack: f64,
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdCheck {
    pub fn pass_count(&self) -> usize {
        self.rows.iter().filter(|r| r.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Checks `λ_k ≤ bound·(1 + slack)` for `k = 1..=n`, counting multiplicity.
pub fn check_threshold(spec: &Spectrum, bound: f64, n: usize, fem_slack: f64) -> Result<ThresholdCheck, AnalysisError> {
    let values = spec.expanded();
    if values.len() < n {
        return Err(AnalysisError::TooFewEigenvalues {
            needed: n,
            available: values.len(),
        });
    }
    let limit = bound * (1.0 + fem_slack);
    let rows = values[..n]
        .iter()
        .enumerate()
        .map(|(i, &lambda)| ThresholdRow {
            k: i + 1,
            lambda,
            margin: limit - lambda,
            passed: lambda <= limit,
        })
        .collect();
    Ok(ThresholdCheck {
        bound,
        slack: fem_slack,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub passed: bool,
    /// `dist_H` at the smallest ε over `dist_H` at the largest.
    pub reduction: f64,
    /// Largest relative step increase between consecutive ε.
    pub worst_increase: f64,
    pub reason: String,
}

/// Relative increase tolerated between consecutive rows.
pub const TREND_JITTER: f64 = 0.1;

/// Passes when the last distance is at most half the first and no step
/// increases by more than 10%. Rows must have strictly decreasing ε.
pub fn convergence_table(rows: &[(f64, f64)]) -> Result<TrendVerdict, AnalysisError> {
    if rows.len() < 3 {
        return Err(AnalysisError::InvalidRows(format!("need at least 3 rows, got {}", rows.len())));
    }
    if rows.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(AnalysisError::InvalidRows("eps must be strictly decreasing".into()));
    }
    if rows.iter().any(|r| !(r.1 >= 0.0) || !r.1.is_finite()) {
        return Err(AnalysisError::InvalidRows("distances must be finite and nonnegative".into()));
    }
    let first = rows[0].1;
    let last = rows[rows.len() - 1].1;
    let reduction = if first > 0.0 {
        last / first
    } else if last == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let worst_increase = rows
        .windows(2)
        .map(|w| if w[0].1 > 0.0 { w[1].1 / w[0].1 - 1.0 } else if w[1].1 > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max);
    let halved = last <= 0.5 * first;
    let monotone = worst_increase <= TREND_JITTER;
    let reason = match (halved, monotone) {
        (true, true) => "distance halved and nonincreasing within jitter".to_string(),
        (false, _) => format!("last/first = {reduction:.3} exceeds 0.5"),
        (true, false) => format!("a step increased by {:.1}%", 100.0 * worst_increase),
    };
    Ok(TrendVerdict {
        passed: halved && monotone,
        reduction,
        worst_increase,
        reason,
    })
}

/// Point of `[0.9Λ, 1.1Λ]` farthest from the reference spectrum, so the
/// truncation edge sits in a spectral gap. Ties go to the point nearest `Λ`.
///
/// The reference is only known up to `known_up_to`; an unseen eigenvalue is
/// assumed to sit right there.
pub fn place_cutoff(reference: &Spectrum, lambda: f64, known_up_to: f64) -> f64 {
    let (a, b) = (0.9 * lambda, 1.1 * lambda);
    let vals = reference.values();
    let dist = |x: f64| {
        vals.iter()
            .map(|v| (v - x).abs())
            .fold((known_up_to - x).abs(), f64::min)
    };
    let mut points = vals.to_vec();
    points.push(known_up_to);
    let mut candidates = vec![a, b, lambda];
    candidates.extend(
        points
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .filter(|&m| m > a && m < b),
    );
    let mut best = lambda;
    let mut best_d = dist(lambda);
    for c in candidates {
        let d = dist(c);
        if d > best_d || (d == best_d && (c - lambda).abs() < (best - lambda).abs()) {
            best = c;
            best_d = d;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub mesh_size: f64,
    pub dof_count: usize,
    pub q_eps: f64,
    pub r_eps: f64,
    pub room_count: usize,
    pub spectrum_file: String,
    pub eigenvalue_count: usize,
    /// Inertia count of the solved interval.
    pub certified_count: usize,
    pub dist_h: f64,
    /// `None` when the regime has `q = ∞`.
    pub threshold: Option<ThresholdSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub bound: f64,
    pub slack: f64,
    pub checked: usize,
    pub passed: usize,
    pub worst_margin: f64,
}

impl From<&ThresholdCheck> for ThresholdSummary {
    fn from(c: &ThresholdCheck) -> Self {
        Self {
            bound: c.bound,
            slack: c.slack,
            checked: c.rows.len(),
            passed: c.pass_count(),
            worst_margin: c.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub preset: Option<String>,
    pub alpha: f64,
    pub beta: f64,
    pub regime: RegimeClass,
    pub limit_operator: String,
    pub lambda_requested: f64,
    pub lambda_used: f64,
    pub sigma0_file: String,
    pub sigma0_mesh_size: f64,
    /// Largest relative change of σ₀ over the last refinement, if any.
    pub sigma0_refinement_change: Option<f64>,
    /// Rows ordered by decreasing ε.
    pub rows: Vec<ConvergenceRow>,
    pub verdict: TrendVerdict,
    pub threshold_passed: bool,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed && self.threshold_passed
    }
}

pub const SPECTRUM_CSV_HEADER: &str = "eps,k,lambda,multiplicity,tag,residual";

/// One line per distinct value; `k` is the 1-based index of its first copy.
/// `eps` is left empty for the limit spectrum.
pub fn write_spectrum_csv<W: Write>(mut out: W, eps: Option<f64>, spec: &Spectrum) -> Result<(), AnalysisError> {
    writeln!(out, "{SPECTRUM_CSV_HEADER}")?;
    let eps = eps.map(|e| format!("{e:?}")).unwrap_or_default();
    let mut k = 1;
    for i in 0..spec.len() {
        let tags: Vec<&str> = spec.tags()[i].iter().map(|t| t.as_str()).collect();
        let tag = if tags.is_empty() { "discrete".to_string() } else { tags.join(";") };
        writeln!(
            out,
            "{eps},{k},{:?},{},{tag},{:e}",
            spec.values()[i],
            spec.multiplicities()[i],
            spec.residuals()[i]
        )?;
        k += spec.multiplicities()[i];
    }
    Ok(())
}

/// Whitespace-separated `eps dist_H` rows for plotting tools.
pub fn write_trend_plot<W: Write>(mut out: W, rows: &[ConvergenceRow]) -> Result<(), AnalysisError> {
    writeln!(out, "# eps dist_H")?;
    for r in rows {
        writeln!(out, "{:?} {:?}", r.eps, r.dist_h)?;
    }
    Ok(())
}
