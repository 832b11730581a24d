//! Shared fixtures for the criterion benches.

use corrugated_core::assembly::{assemble_mass, assemble_stiffness, DensityField};
use corrugated_core::geometry::{build_perturbed_domain, exponents_to_params, BaseDomain, ShapeSpec};
use corrugated_core::mesh::{mesh_perturbed_domain, mesh_rectangle, MeshOptions};
use corrugated_core::{SparseSymMatrix, TriMesh};

pub fn unit_square(n: usize) -> TriMesh {
    mesh_rectangle(&BaseDomain::unit_square(), 1.0 / n as f64).expect("unit square mesh")
}

/// Mesh of the coupled preset at one ε.
pub fn coupled_domain(eps: f64, mesh_h: f64) -> TriMesh {
    let params = exponents_to_params(eps, 2.0, -1.0).expect("params");
    let domain = build_perturbed_domain(&BaseDomain::unit_square(), &params, &ShapeSpec::canonical()).expect("domain");
    mesh_perturbed_domain(&domain, &MeshOptions::new(mesh_h)).expect("mesh")
}

pub fn neumann_pencil(mesh: &TriMesh) -> (SparseSymMatrix, SparseSymMatrix) {
    (
        assemble_stiffness(mesh).expect("stiffness"),
        assemble_mass(mesh, &DensityField::uniform()).expect("mass"),
    )
}
