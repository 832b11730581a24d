//! Closed-form and separable reference spectra on the base rectangle.
//!
//! With `u = cos(pπx/W)·f(y)` every transverse index `p` reduces the problem
//! to `−f'' = s·f` on `(−H, 0)`, `s = λ − p²π²/W²`, `f'(−H) = 0`, and a top
//! condition `f'(0) = μ(λ)·f(0)`. The eigenvalues are the zeros of a
//! continuous characteristic function found by sign changes on a grid.

use super::{LimitError, LimitProblem};
use crate::eigen::spectrum::{SpectralTag, Spectrum};
use std::f64::consts::PI;

/// Default half-width of the window around `q`, relative to `q`.
pub const DEFAULT_Q_WINDOW: f64 = 1e-2;

/// `π²(p²/W² + m²/H²) ≤ Λ`, `p, m ≥ 0`.
pub fn neumann_rectangle_analytic(width: f64, depth: f64, lambda_max: f64) -> Spectrum {
    separable_grid(width, depth, lambda_max, 0.0)
}

/// Dirichlet on the top side, Neumann elsewhere: `π²(p²/W² + (m+½)²/H²)`.
pub fn dirichlet_gamma_analytic(width: f64, depth: f64, lambda_max: f64) -> Spectrum {
    separable_grid(width, depth, lambda_max, 0.5)
}

fn separable_grid(width: f64, depth: f64, lambda_max: f64, offset: f64) -> Spectrum {
    let mut vals = Vec::new();
    for p in 0.. {
        let cx = (p as f64 * PI / width).powi(2);
        if cx > lambda_max {
            break;
        }
        for m in 0.. {
            let v = cx + ((m as f64 + offset) * PI / depth).powi(2);
            if v > lambda_max {
                break;
            }
            vals.push(v);
        }
    }
    Spectrum::from_exact(vals)
}

/// Characteristic function of one transverse mode. Its zeros in `λ` are
/// the eigenvalues with that transverse index. For the coupled problem it
/// is multiplied by `(q − λ)` to remove the pole at `q`.
fn characteristic(problem: &LimitProblem, depth: f64, cx: f64, lambda: f64) -> f64 {
    let s = lambda - cx;
    // (f'(0), f(0)) with f(−H) normalised; cosh-scaled when s < 0
    let (df, f) = if s > 0.0 {
        let k = s.sqrt();
        (-k * (k * depth).sin(), (k * depth).cos())
    } else if s < 0.0 {
        let k = (-s).sqrt();
        (k * (k * depth).tanh(), 1.0)
    } else {
        (0.0, 1.0)
    };
    match *problem {
        LimitProblem::A | LimitProblem::Aq { .. } => df,
        LimitProblem::Ar { r } => df - lambda * r * f,
        LimitProblem::Aqr { q, r } => (q - lambda) * df - lambda * q * r * f,
    }
}

/// Sign-change roots of `f` on `(0, hi]` with `n` grid cells, refined by
/// bisection to roundoff.
fn grid_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / n as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + step * i as f64 };
        let fb = f(b);
        if fb == 0.0 {
            roots.push(b);
        } else if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    x0 = mid;
                    x1 = mid;
                    break;
                }
                if (fm < 0.0) == (f0 < 0.0) {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Roots of one transverse mode on `[0, Λ]`; the grid is halved until the
/// root count repeats.
fn mode_roots(problem: &LimitProblem, width: f64, depth: f64, p: usize, lambda_max: f64) -> Result<Vec<f64>, LimitError> {
    let cx = (p as f64 * PI / width).powi(2);
    let f = |l: f64| characteristic(problem, depth, cx, l);
    // s = 0 at λ = 0 makes λ = 0 an exact root of the p = 0 mode
    let start = if p == 0 { 1e-12 * lambda_max.max(1.0) } else { 0.0 };
    let base_cells = ((lambda_max * depth * depth).sqrt() * 8.0).ceil().max(64.0) as usize;
    let mut previous: Option<Vec<f64>> = None;
    for halving in 0..=6 {
        let roots = grid_roots(&f, start, lambda_max, base_cells << halving);
        if let Some(prev) = &previous {
            if prev.len() == roots.len() {
                let mut out = roots;
                if p == 0 {
                    out.insert(0, 0.0);
                }
                return Ok(out);
            }
        }
        previous = Some(roots);
    }
    Err(LimitError::OracleUnstable { p })
}

/// Reference spectrum on `[0, Λ]` for the separable problems on the
/// rectangle `(0, W) × (−H, 0)`.
///
/// For the coupled problem the roots inside the window `|λ − q| ≤ w·q`
/// (the accumulation of the plus branch) are dropped and `q` itself is
/// added with the `essential-limit` tag.
pub fn separable_oracle(
    width: f64,
    depth: f64,
    problem: &LimitProblem,
    lambda_max: f64,
    window: f64,
) -> Result<Spectrum, LimitError> {
    if !(width > 0.0 && depth > 0.0 && lambda_max > 0.0) {
        return Err(LimitError::InvalidArgument(format!(
            "oracle needs positive W, H, Λ (got {width}, {depth}, {lambda_max})"
        )));
    }
    problem.check()?;
    let q_window = match *problem {
        LimitProblem::Aqr { q, .. } => Some((q * (1.0 - window), q * (1.0 + window))),
        _ => None,
    };
    let in_window = |l: f64| q_window.is_some_and(|(a, b)| l >= a && l <= b);
    let mut vals = Vec::new();
    for p in 0usize.. {
        let cx = (p as f64 * PI / width).powi(2);
        let roots = mode_roots(problem, width, depth, p, lambda_max)?;
        let kept: Vec<f64> = roots.iter().copied().filter(|&l| !in_window(l)).collect();
        vals.extend(kept.iter().copied());
        if cx > lambda_max && kept.is_empty() {
            // Higher modes only move their (single) root further up, or
            // further into the window around q.
            break;
        }
        if p > 1_000_000 {
            return Err(LimitError::OracleUnstable { p });
        }
    }
    let mut spec = Spectrum::from_exact(vals);
    match *problem {
        LimitProblem::Aqr { q, .. } | LimitProblem::Aq { q } if q <= lambda_max => {
            spec.insert_tagged(q, Some(SpectralTag::EssentialLimit), 0.0);
        }
        _ => {}
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumann_unit_square() {
        let s = neumann_rectangle_analytic(1.0, 1.0, 25.0);
        assert_eq!(s.multiplicities(), &[1, 2, 1]);
        assert!((s.values()[1] - PI * PI).abs() < 1e-12);
        assert!((s.values()[2] - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(neumann_rectangle_analytic(1.0, 1.0, 5.0).values(), &[0.0]);
        let wide = neumann_rectangle_analytic(2.0, 1.0, 10.0);
        assert_eq!(wide.len(), 3);
        assert!((wide.values()[1] - PI * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_top_list() {
        let s = dirichlet_gamma_analytic(1.0, 1.0, 13.0);
        assert!((s.values()[0] - PI * PI / 4.0).abs() < 1e-12);
        assert!((s.values()[1] - (PI * PI / 4.0 + PI * PI)).abs() < 1e-12);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn steklov_type_oracle_reduces_to_neumann() {
        let s = separable_oracle(1.0, 1.0, &LimitProblem::A, 25.0, DEFAULT_Q_WINDOW).unwrap();
        let n = neumann_rectangle_analytic(1.0, 1.0, 25.0);
        assert_eq!(s.multiplicities(), n.multiplicities());
        for (a, b) in s.values().iter().zip(n.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mass_on_gamma_lowers_eigenvalues() {
        let n = neumann_rectangle_analytic(1.0, 1.0, 30.0);
        let s = separable_oracle(1.0, 1.0, &LimitProblem::Ar { r: 1.0 }, 30.0, DEFAULT_Q_WINDOW).unwrap();
        assert_eq!(s.values()[0], 0.0);
        // first p = 0 root: −κ sin κ = κ² cos κ ⇒ tan κ = −κ
        let k = 2.028757838110434;
        assert!(s.values().iter().any(|v| (v - k * k).abs() < 1e-9), "{:?}", s.values());
        // p = 1 carries a mode localised at Γ below its transverse threshold π²
        let surface = s.values()[1];
        let kappa = (PI * PI - surface).sqrt();
        assert!(surface < PI * PI && (kappa * kappa.tanh() - surface).abs() < 1e-9);
        assert!(s.values()[1] < n.values()[1]);
    }

    #[test]
    fn coupled_oracle_tags_q() {
        let s = separable_oracle(1.0, 1.0, &LimitProblem::Aqr { q: 1.6, r: 0.25 }, 30.0, DEFAULT_Q_WINDOW).unwrap();
        let i = s.values().iter().position(|&v| v == 1.6).unwrap();
        assert!(s.has_tag(i, SpectralTag::EssentialLimit));
        assert_eq!(s.values()[0], 0.0);
        assert!(s.values().iter().all(|&v| v == 1.6 || (v - 1.6).abs() > 0.016));
    }
}
