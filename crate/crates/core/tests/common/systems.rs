//! Small generalized eigenproblems used to check the sparse solver against
//! the dense oracle.

#![allow(dead_code)]

use corrugated_core::assembly::{
    assemble_aqr_blocks, assemble_boundary_mass, assemble_mass, assemble_stiffness, DensityField, TraceMap,
};
use corrugated_core::eigen::dense::generalized_eigenvalues;
use corrugated_core::geometry::{build_perturbed_domain, exponents_to_params};
use corrugated_core::mesh::{mesh_perturbed_domain, mesh_rectangle, MeshOptions};
use corrugated_core::{BaseDomain, EigSolveOptions, Pencil, ShapeSpec, SparseSymMatrix, TriMesh};

pub const DENSE_LIMIT: usize = 2000;
pub const AGREEMENT: f64 = 1e-8;

pub struct System {
    pub name: String,
    pub s: SparseSymMatrix,
    pub b: SparseSymMatrix,
}

fn square(n: usize) -> TriMesh {
    mesh_rectangle(&BaseDomain::unit_square(), 1.0 / n as f64).unwrap()
}

fn perturbed(eps: f64, alpha: f64, beta: f64, h: f64) -> (TriMesh, f64) {
    let p = exponents_to_params(eps, alpha, beta).unwrap();
    let dom = build_perturbed_domain(&BaseDomain::unit_square(), &p, &ShapeSpec::canonical()).unwrap();
    (mesh_perturbed_domain(&dom, &MeshOptions::new(h)).unwrap(), p.rho)
}

pub fn systems() -> Vec<System> {
    let mut out = Vec::new();
    for n in [16, 40] {
        let m = square(n);
        out.push(System {
            name: format!("neumann square 1/{n}"),
            s: assemble_stiffness(&m).unwrap(),
            b: assemble_mass(&m, &DensityField::uniform()).unwrap(),
        });
    }
    for (label, alpha, beta) in [("coupled", 2.0, -1.0), ("steklov", 1.0, -1.0), ("neumann", 1.0, 1.0)] {
        let (m, rho) = perturbed(0.25, alpha, beta, 1.0 / 16.0);
        out.push(System {
            name: format!("{label} eps=1/4"),
            s: assemble_stiffness(&m).unwrap(),
            b: assemble_mass(&m, &DensityField::with_room_density(rho).unwrap()).unwrap(),
        });
    }
    let m = square(24);
    let trace = TraceMap::from_mesh(&m);
    let k = assemble_stiffness(&m).unwrap();
    let mass = assemble_mass(&m, &DensityField::uniform()).unwrap();
    let g = assemble_boundary_mass(&m, &trace).unwrap();
    let lifted = corrugated_core::assembly::lift_boundary_mass(&g, &trace, k.dim());
    out.push(System {
        name: "robin mu=5 square 1/24".into(),
        s: SparseSymMatrix::linear_combination(&[(1.0, &k), (-5.0, &lifted)]),
        b: mass.clone(),
    });
    let (s, b) = assemble_aqr_blocks(&k, &mass, &g, &trace, 1.6, 0.25).unwrap();
    out.push(System {
        name: "coupled block square 1/24".into(),
        s,
        b,
    });
    out
}

pub struct Comparison {
    pub count: usize,
    pub certified: usize,
    pub dense_count: usize,
    pub worst: f64,
}

/// Solves `[lo, hi]` with both solvers; the interval ends sit in the middle
/// of dense spectral gaps.
pub fn compare(sys: &System, hi_target: f64) -> Comparison {
    let n = sys.s.dim();
    assert!(n <= DENSE_LIMIT, "{} has {n} dofs", sys.name);
    let dense = generalized_eigenvalues(sys.s.to_dense(), sys.b.to_dense(), n).unwrap();
    let lo = dense[0] - 1.0;
    let j = dense.partition_point(|&v| v <= hi_target).clamp(1, n - 1);
    let hi = 0.5 * (dense[j - 1] + dense[j]);
    let expected: Vec<f64> = dense.iter().copied().filter(|&v| v <= hi).collect();
    let sol = Pencil::new(&sys.s, &sys.b, EigSolveOptions::default())
        .unwrap()
        .eigs_in_interval(lo, hi)
        .unwrap();
    let worst = if sol.values.len() == expected.len() {
        sol.values
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Comparison {
        count: sol.values.len(),
        certified: sol.certified_count,
        dense_count: expected.len(),
        worst,
    }
}
