//! P1 finite-element operators with closed-form element integrals.

use crate::mesh::{Region, TriMesh};
use crate::sparse::SparseSymMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("triangle {0} has non-positive area")]
    DegenerateTriangle(usize),
    #[error("density must be positive in every region, got {0}")]
    NonPositiveDensity(f64),
    #[error("mesh has no boundary edges on the top side")]
    EmptyGamma,
    #[error("coupling needs finite positive q and r, got q = {q}, r = {r}")]
    InvalidCoupling { q: f64, r: f64 },
}

/// Piecewise-constant density: 1 on the base and passages, `room` in rooms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityField {
    pub room: f64,
}

impl DensityField {
    pub fn uniform() -> Self {
        Self { room: 1.0 }
    }

    pub fn with_room_density(room: f64) -> Result<Self, AssemblyError> {
        if !(room > 0.0 && room.is_finite()) {
            return Err(AssemblyError::NonPositiveDensity(room));
        }
        Ok(Self { room })
    }

    pub fn value(&self, region: Region) -> f64 {
        match region {
            Region::Room(_) => self.room,
            Region::Omega | Region::Passage(_) => 1.0,
        }
    }
}

/// Numbering of the `Γ` vertices as boundary unknowns `0..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMap {
    vertex_ids: Vec<usize>,
    local: Vec<Option<usize>>,
}

impl TraceMap {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let mut local = vec![None; mesh.vertex_count()];
        for (k, &v) in mesh.gamma_vertex_ids.iter().enumerate() {
            local[v] = Some(k);
        }
        Self {
            vertex_ids: mesh.gamma_vertex_ids.clone(),
            local,
        }
    }

    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    /// Mesh vertex of each boundary unknown.
    pub fn vertex_ids(&self) -> &[usize] {
        &self.vertex_ids
    }

    pub fn local_index(&self, vertex: usize) -> Option<usize> {
        self.local.get(vertex).copied().flatten()
    }

    /// Restriction of nodal values to `Γ`.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.vertex_ids.iter().map(|&v| u[v]).collect()
    }
}

fn corners(mesh: &TriMesh, t: usize) -> ([f64; 3], [f64; 3], f64) {
    let [a, b, c] = mesh.triangles[t].map(|i| mesh.vertices[i]);
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    let p = [a, b, c];
    let mut bs = [0.0; 3];
    let mut cs = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        bs[i] = p[j][1] - p[k][1];
        cs[i] = p[k][0] - p[j][0];
    }
    (bs, cs, area)
}

/// Gradients of the hat functions are `(b_i, c_i)/(2A)`, so the element
/// stiffness is `(b_i b_j + c_i c_j)/(4A)`.
pub fn element_stiffness(mesh: &TriMesh, t: usize) -> Result<[[f64; 3]; 3], AssemblyError> {
    let (b, c, area) = corners(mesh, t);
    if !(area > 0.0) {
        return Err(AssemblyError::DegenerateTriangle(t));
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok(k)
}

pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SparseSymMatrix, AssemblyError> {
    let mut trip = Vec::with_capacity(6 * mesh.triangle_count());
    for t in 0..mesh.triangle_count() {
        let k = element_stiffness(mesh, t)?;
        let ids = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..=i {
                trip.push((ids[i], ids[j], k[i][j]));
            }
        }
    }
    Ok(SparseSymMatrix::from_triplets(mesh.vertex_count(), trip))
}

/// `ρ·A/12·[[2,1,1],[1,2,1],[1,1,2]]` per element.
pub fn assemble_mass(mesh: &TriMesh, density: &DensityField) -> Result<SparseSymMatrix, AssemblyError> {
    if !(density.room > 0.0) {
        return Err(AssemblyError::NonPositiveDensity(density.room));
    }
    let mut trip = Vec::with_capacity(6 * mesh.triangle_count());
    for t in 0..mesh.triangle_count() {
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            return Err(AssemblyError::DegenerateTriangle(t));
        }
        let w = density.value(mesh.regions[t]) * area / 12.0;
        let ids = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..=i {
                trip.push((ids[i], ids[j], if i == j { 2.0 * w } else { w }));
            }
        }
    }
    Ok(SparseSymMatrix::from_triplets(mesh.vertex_count(), trip))
}

/// `L/6·[[2,1],[1,2]]` per `Γ` edge, in boundary numbering.
pub fn assemble_boundary_mass(mesh: &TriMesh, trace: &TraceMap) -> Result<SparseSymMatrix, AssemblyError> {
    let mut trip = Vec::new();
    for [a, b] in mesh.gamma_edges() {
        let (Some(la), Some(lb)) = (trace.local_index(a), trace.local_index(b)) else {
            continue;
        };
        let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
        let w = (p[0] - q[0]).hypot(p[1] - q[1]) / 6.0;
        trip.push((la, la, 2.0 * w));
        trip.push((lb, lb, 2.0 * w));
        trip.push((la, lb, w));
    }
    if trip.is_empty() {
        return Err(AssemblyError::EmptyGamma);
    }
    Ok(SparseSymMatrix::from_triplets(trace.len(), trip))
}

/// Boundary mass moved onto the volume numbering (`Tᵀ G T`).
pub fn lift_boundary_mass(g: &SparseSymMatrix, trace: &TraceMap, volume_dim: usize) -> SparseSymMatrix {
    g.embed(volume_dim, trace.vertex_ids())
}

/// Two-field pencil for the coupled limit problem. Unknowns are the nodal
/// values `u₁` followed by the boundary values `u₂`:
///
/// ```text
/// S = [[K + qr·TᵀGT, −qr·TᵀG], [−qr·GT, qr·G]],   B = [[M, 0], [0, r·G]]
/// ```
pub fn assemble_aqr_blocks(
    k: &SparseSymMatrix,
    m: &SparseSymMatrix,
    g: &SparseSymMatrix,
    trace: &TraceMap,
    q: f64,
    r: f64,
) -> Result<(SparseSymMatrix, SparseSymMatrix), AssemblyError> {
    if !(q > 0.0 && r > 0.0 && q.is_finite() && r.is_finite()) {
        return Err(AssemblyError::InvalidCoupling { q, r });
    }
    let n = k.dim();
    let dim = n + trace.len();
    let qr = q * r;
    let t = trace.vertex_ids();

    let mut s_trip = Vec::with_capacity(k.nnz() + 4 * g.nnz());
    k.for_each_full(|i, j, v| {
        if i >= j {
            s_trip.push((i, j, v));
        }
    });
    g.for_each_full(|a, b, v| {
        if a >= b {
            s_trip.push((t[a], t[b], qr * v));
            s_trip.push((n + a, n + b, qr * v));
        }
        s_trip.push((n + a, t[b], -qr * v));
    });
    let mut b_trip = Vec::with_capacity(m.nnz() + g.nnz());
    m.for_each_full(|i, j, v| {
        if i >= j {
            b_trip.push((i, j, v));
        }
    });
    g.for_each_full(|a, b, v| {
        if a >= b {
            b_trip.push((n + a, n + b, r * v));
        }
    });
    Ok((
        SparseSymMatrix::from_triplets(dim, s_trip),
        SparseSymMatrix::from_triplets(dim, b_trip),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BaseDomain;
    use crate::mesh::mesh_rectangle;

    fn single_triangle() -> TriMesh {
        TriMesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![Region::Omega])
    }

    #[test]
    fn reference_element_stiffness() {
        let k = element_stiffness(&single_triangle(), 0).unwrap();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_element_mass() {
        let m = assemble_mass(&single_triangle(), &DensityField::uniform()).unwrap();
        let a = 0.5 / 12.0;
        assert!((m.get(0, 0) - 2.0 * a).abs() < 1e-16);
        assert!((m.get(1, 0) - a).abs() < 1e-16);
    }

    #[test]
    fn room_density_scales_mass() {
        let mesh = TriMesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![Region::Room(1)]);
        let m1 = assemble_mass(&mesh, &DensityField::uniform()).unwrap();
        let m10 = assemble_mass(&mesh, &DensityField::with_room_density(10.0).unwrap()).unwrap();
        assert!((m10.get(2, 1) - 10.0 * m1.get(2, 1)).abs() < 1e-15);
        assert!(DensityField::with_room_density(0.0).is_err());
    }

    #[test]
    fn single_gamma_edge() {
        let mesh = single_triangle();
        let trace = TraceMap::from_mesh(&mesh);
        assert_eq!(trace.len(), 2);
        let g = assemble_boundary_mass(&mesh, &trace).unwrap();
        assert!((g.get(0, 0) - 2.0 / 6.0).abs() < 1e-16);
        assert!((g.get(1, 0) - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn block_kernel_and_coupling() {
        let mesh = mesh_rectangle(&BaseDomain::unit_square(), 0.25).unwrap();
        let trace = TraceMap::from_mesh(&mesh);
        let k = assemble_stiffness(&mesh).unwrap();
        let m = assemble_mass(&mesh, &DensityField::uniform()).unwrap();
        let g = assemble_boundary_mass(&mesh, &trace).unwrap();
        let (s, b) = assemble_aqr_blocks(&k, &m, &g, &trace, 1.6, 0.25).unwrap();
        let ones = vec![1.0; s.dim()];
        assert!(s.mul_vec(&ones).iter().all(|v| v.abs() < 1e-13));
        // u₁ = 0: only the qr·G block remains
        let n = k.dim();
        let mut u = vec![0.0; s.dim()];
        let u2: Vec<f64> = (0..trace.len()).map(|i| (i as f64).sin()).collect();
        u[n..].copy_from_slice(&u2);
        assert!((s.quad_form(&u) - 0.4 * g.quad_form(&u2)).abs() < 1e-13);
        // matched trace: the coupling vanishes
        let u1: Vec<f64> = mesh.vertices.iter().map(|p| p[0] * p[0] - p[1]).collect();
        let mut w = u1.clone();
        w.extend(trace.restrict(&u1));
        assert!((s.quad_form(&w) - k.quad_form(&u1)).abs() < 1e-12);
        assert!(b.get(n, n) > 0.0);
        assert!(assemble_aqr_blocks(&k, &m, &g, &trace, 1.6, 0.0).is_err());
    }
}
