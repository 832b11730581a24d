//! Property checks shared by the proptest suite and the acceptance harness.

#![allow(dead_code)]

use corrugated_core::geometry::{build_perturbed_domain, compute_scaling, exponents_to_params, Rect};
use corrugated_core::limit::LimitSolver;
use corrugated_core::{hausdorff_distance, BaseDomain, Interval, ShapeSpec, Spectrum};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const HAUSDORFF_CASES: u32 = 10_000;
pub const MU_GRID: usize = 20;
pub const ROBIN_MODES: usize = 8;

/// Brute-force Hausdorff distance of two finite sets.
pub fn brute_hausdorff(xs: &[f64], ys: &[f64]) -> f64 {
    let directed = |a: &[f64], b: &[f64]| {
        a.iter()
            .map(|x| b.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(xs, ys).max(directed(ys, xs))
}

fn finite_set() -> impl Strategy<Value = Vec<f64>> {
    // a coarse grid makes coincident points and equal sets common
    prop::collection::vec(0u32..=96, 1..12).prop_map(|v| v.into_iter().map(|i| i as f64 / 8.0).collect())
}

/// Three random sets, the second one sometimes a reshuffle of the first.
pub fn three_sets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (finite_set(), finite_set(), finite_set(), any::<bool>()).prop_map(|(x, y, z, copy)| {
        let y = if copy { x.iter().rev().copied().collect() } else { y };
        (x, y, z)
    })
}

pub fn check_hausdorff_axioms((x, y, z): (Vec<f64>, Vec<f64>, Vec<f64>)) -> Result<(), TestCaseError> {
    let l = Interval::new(0.0, 12.0).unwrap();
    let (sx, sy, sz) = (Spectrum::from_exact(x), Spectrum::from_exact(y), Spectrum::from_exact(z));
    let d = |a: &Spectrum, b: &Spectrum| hausdorff_distance(a, b, &l).unwrap();
    let dxy = d(&sx, &sy);
    prop_assert_eq!(d(&sx, &sx), 0.0);
    prop_assert!(dxy >= 0.0);
    prop_assert_eq!(dxy, d(&sy, &sx));
    prop_assert_eq!(dxy == 0.0, sx.values() == sy.values());
    prop_assert!(d(&sx, &sz) <= dxy + d(&sy, &sz) + 1e-12);
    prop_assert!((dxy - brute_hausdorff(sx.values(), sy.values())).abs() < 1e-12);
    Ok(())
}

/// `(ε, α, β)` inside the admissible parameter range.
pub fn admissible_exponents() -> impl Strategy<Value = (f64, f64, f64)> {
    (2u32..=6, 1.0f64..5.0, -1.0f64..2.0).prop_map(|(k, a, b)| (0.5f64.powi(k as i32), a, b))
}

fn disjoint(a: &Rect, b: &Rect) -> bool {
    !a.overlaps(b)
}

/// Rectangles have disjoint interiors and the area is the closed-form sum.
pub fn check_area_conservation((eps, alpha, beta): (f64, f64, f64)) -> Result<(), TestCaseError> {
    let base = BaseDomain::unit_square();
    let shape = ShapeSpec::canonical();
    let p = exponents_to_params(eps, alpha, beta).unwrap();
    let dom = build_perturbed_domain(&base, &p, &shape).unwrap();
    let n = dom.room_count() as f64;
    prop_assert_eq!(dom.rooms.len(), dom.passages.len());
    let expected = base.area()
        + n * p.d * shape.passage_width * p.h
        + n * p.b * p.b * shape.room_width * shape.room_height;
    prop_assert!((dom.area() - expected).abs() <= 1e-14 * expected);
    let body = Rect::new(0.0, base.width, -base.depth, 0.0);
    let mut all: Vec<Rect> = vec![body];
    all.extend(dom.passages.iter().copied());
    all.extend(dom.rooms.iter().copied());
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            prop_assert!(disjoint(&all[i], &all[j]), "{:?} overlaps {:?}", all[i], all[j]);
        }
    }
    let s = compute_scaling(&p, &shape, &base);
    let identity = p.d * shape.passage_width / (p.h * eps);
    prop_assert!((s.q_eps * s.r_eps - identity).abs() <= 1e-12 * identity);
    Ok(())
}

/// `λ_k(μ)` is nonincreasing along an increasing μ grid, up to `tol`
/// relative. Returns the worst violation.
pub fn robin_monotonicity(solver: &LimitSolver, grid: &[f64], k: usize, tol: f64) -> Result<f64, String> {
    let mut prev: Option<Vec<f64>> = None;
    let mut worst = 0.0f64;
    for &mu in grid {
        let vals = solver.robin_eigenvalues(mu, k).map_err(|e| e.to_string())?.values;
        if vals.len() < k {
            return Err(format!("mu = {mu}: only {} eigenvalues", vals.len()));
        }
        if let Some(p) = &prev {
            for (i, (a, b)) in p.iter().zip(&vals).enumerate() {
                let excess = (b - a) / a.abs().max(1.0);
                worst = worst.max(excess);
                if excess > tol {
                    return Err(format!("k = {}: λ rose from {a} to {b} at mu = {mu}", i + 1));
                }
            }
        }
        prev = Some(vals);
    }
    Ok(worst)
}

/// Increasing grid of `MU_GRID` points in `[lo, hi]`.
pub fn mu_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..MU_GRID).map(|i| lo + (hi - lo) * i as f64 / (MU_GRID - 1) as f64).collect()
}
