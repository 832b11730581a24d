//! Conforming triangulations of unions of axis-aligned rectangles.

mod generate;
mod io;

pub use generate::{mesh_perturbed_domain, mesh_rectangle, MeshOptions};
pub use io::{read_mesh, write_mesh};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

pub const DEFAULT_VERTEX_BUDGET: usize = 2_000_000;
pub const DEFAULT_ASPECT_LIMIT: f64 = 8.0;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("target mesh size must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("aspect limit must exceed 1, got {0}")]
    InvalidAspectLimit(f64),
    #[error("mesh would need {needed} vertices, budget is {budget}")]
    VertexBudget { needed: usize, budget: usize },
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Region a triangle belongs to; the index is the anchor index of the
/// passage or room.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Omega,
    Passage(i64),
    Room(i64),
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Omega => write!(f, "omega"),
            Region::Passage(i) => write!(f, "passage_{i}"),
            Region::Room(i) => write!(f, "room_{i}"),
        }
    }
}

impl std::str::FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "omega" {
            return Ok(Region::Omega);
        }
        let parse = |rest: &str| rest.parse::<i64>().map_err(|e| format!("bad region index in {s:?}: {e}"));
        if let Some(rest) = s.strip_prefix("passage_") {
            return parse(rest).map(Region::Passage);
        }
        if let Some(rest) = s.strip_prefix("room_") {
            return parse(rest).map(Region::Room);
        }
        Err(format!("unknown region tag {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Gamma,
    Outer,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::Gamma => "gamma",
            BoundaryTag::Outer => "outer",
        })
    }
}

impl std::str::FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gamma" => Ok(BoundaryTag::Gamma),
            "outer" => Ok(BoundaryTag::Outer),
            _ => Err(format!("unknown boundary tag {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary_edges: Vec<([usize; 2], BoundaryTag)>,
    /// Vertices on `y = 0`, ordered by `x`.
    pub gamma_vertex_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Degrees.
    pub min_angle: f64,
    /// Longest over shortest edge, worst triangle.
    pub max_aspect_ratio: f64,
    /// Same, restricted to passage triangles (0 without passages).
    pub max_passage_aspect_ratio: f64,
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub min_edge_length: f64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    /// Builds a mesh from vertices, triangles and regions, deriving the
    /// boundary edges and `Γ` vertices. An edge used once is on the
    /// boundary; it is tagged `gamma` when it lies on `y = 0` and belongs to
    /// an `omega` triangle.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, regions: Vec<Region>) -> Self {
        let mut uses: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(triangles.len() * 2);
        let mut order = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = uses.entry(edge_key(a, b)).or_insert_with(|| {
                    order.push(((a, b), t));
                    (0, t)
                });
                e.0 += 1;
            }
        }
        let mut boundary_edges = Vec::new();
        for ((a, b), t) in order {
            if uses[&edge_key(a, b)].0 != 1 {
                continue;
            }
            let on_top = vertices[a][1] == 0.0 && vertices[b][1] == 0.0;
            let tag = if on_top && regions[t] == Region::Omega {
                BoundaryTag::Gamma
            } else {
                BoundaryTag::Outer
            };
            boundary_edges.push(([a, b], tag));
        }
        let mut mesh = Self {
            vertices,
            triangles,
            regions,
            boundary_edges,
            gamma_vertex_ids: Vec::new(),
        };
        mesh.gamma_vertex_ids = mesh.compute_gamma_vertices();
        mesh
    }

    fn compute_gamma_vertices(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.vertices.len()).filter(|&v| self.vertices[v][1] == 0.0).collect();
        ids.sort_by(|&a, &b| self.vertices[a][0].total_cmp(&self.vertices[b][0]));
        ids
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.signed_area(t)).sum()
    }

    pub fn area_by_region(&self) -> BTreeMap<Region, f64> {
        let mut out = BTreeMap::new();
        for t in 0..self.triangle_count() {
            *out.entry(self.regions[t]).or_insert(0.0) += self.signed_area(t);
        }
        out
    }

    /// Number of triangles using each undirected edge.
    pub fn edge_use_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut uses = HashMap::with_capacity(self.triangles.len() * 2);
        for tri in &self.triangles {
            for k in 0..3 {
                *uses.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        uses
    }

    pub fn gamma_edges(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.boundary_edges
            .iter()
            .filter(|(_, t)| *t == BoundaryTag::Gamma)
            .map(|(e, _)| *e)
    }

    /// Checks orientation, conformity and vertex uniqueness.
    pub fn validate(&self) -> Result<(), MeshError> {
        for t in 0..self.triangle_count() {
            if !(self.signed_area(t) > 0.0) {
                return Err(MeshError::Invalid(format!("triangle {t} has non-positive area")));
            }
        }
        for (e, c) in self.edge_use_counts() {
            if c != 1 && c != 2 {
                return Err(MeshError::Invalid(format!("edge {e:?} used by {c} triangles")));
            }
        }
        let mut sorted: Vec<[f64; 2]> = self.vertices.clone();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let tol = 1e-12 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        for w in sorted.windows(2) {
            if (w[0][0] - w[1][0]).abs() <= tol && (w[0][1] - w[1][1]).abs() <= tol {
                return Err(MeshError::Invalid(format!("duplicate vertex near {:?}", w[0])));
            }
        }
        Ok(())
    }

    pub fn quality(&self) -> QualityReport {
        mesh_quality(self)
    }
}

fn triangle_metrics(mesh: &TriMesh, t: usize) -> (f64, f64, f64) {
    let idx = mesh.triangles[t];
    let p = idx.map(|i| mesh.vertices[i]);
    let len = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let l = [len(p[1], p[2]), len(p[2], p[0]), len(p[0], p[1])];
    let mut min_angle = f64::INFINITY;
    for k in 0..3 {
        let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
        // angle opposite edge a
        let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
        min_angle = min_angle.min(cos.acos().to_degrees());
    }
    let longest = l.iter().copied().fold(0.0, f64::max);
    let shortest = l.iter().copied().fold(f64::INFINITY, f64::min);
    (min_angle, longest / shortest, shortest)
}

pub fn mesh_quality(mesh: &TriMesh) -> QualityReport {
    let mut r = QualityReport {
        min_angle: f64::INFINITY,
        max_aspect_ratio: 0.0,
        max_passage_aspect_ratio: 0.0,
        vertex_count: mesh.vertex_count(),
        triangle_count: mesh.triangle_count(),
        min_edge_length: f64::INFINITY,
    };
    for t in 0..mesh.triangle_count() {
        let (angle, aspect, shortest) = triangle_metrics(mesh, t);
        r.min_angle = r.min_angle.min(angle);
        r.max_aspect_ratio = r.max_aspect_ratio.max(aspect);
        r.min_edge_length = r.min_edge_length.min(shortest);
        if matches!(mesh.regions[t], Region::Passage(_)) {
            r.max_passage_aspect_ratio = r.max_passage_aspect_ratio.max(aspect);
        }
    }
    r
}

/// Splits every triangle into four through its edge midpoints.
pub fn refine_uniform(mesh: &TriMesh) -> Result<TriMesh, MeshError> {
    refine_uniform_with_budget(mesh, DEFAULT_VERTEX_BUDGET)
}

pub fn refine_uniform_with_budget(mesh: &TriMesh, budget: usize) -> Result<TriMesh, MeshError> {
    let uses = mesh.edge_use_counts();
    let needed = mesh.vertex_count() + uses.len();
    if needed > budget {
        return Err(MeshError::VertexBudget { needed, budget });
    }
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(uses.len());
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        *mid.entry(edge_key(a, b)).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangle_count());
    let mut regions = Vec::with_capacity(4 * mesh.triangle_count());
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        regions.extend([mesh.regions[t]; 4]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for &([a, b], tag) in &mesh.boundary_edges {
        let m = mid[&edge_key(a, b)];
        boundary_edges.push(([a, m], tag));
        boundary_edges.push(([m, b], tag));
    }
    let mut out = TriMesh {
        vertices,
        triangles,
        regions,
        boundary_edges,
        gamma_vertex_ids: Vec::new(),
    };
    out.gamma_vertex_ids = out.compute_gamma_vertices();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BaseDomain;

    #[test]
    fn region_tags_round_trip() {
        for r in [Region::Omega, Region::Passage(3), Region::Room(-2)] {
            assert_eq!(r.to_string().parse::<Region>().unwrap(), r);
        }
        assert!("cellar_1".parse::<Region>().is_err());
    }

    #[test]
    fn refinement_quadruples_and_keeps_quality() {
        let m = mesh_rectangle(&BaseDomain::unit_square(), 0.5).unwrap();
        assert_eq!(m.triangle_count(), 8);
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.triangle_count(), 32);
        assert_eq!(r.vertex_count(), 25);
        r.validate().unwrap();
        assert!((r.total_area() - 1.0).abs() < 1e-15);
        let gm = m.gamma_edges().count();
        assert_eq!(r.gamma_edges().count(), 2 * gm);
        assert!((m.quality().min_angle - 45.0).abs() < 1e-12);
        assert!((r.quality().min_angle - m.quality().min_angle).abs() < 1e-9);
    }

    #[test]
    fn budget_is_enforced_on_refinement() {
        let m = mesh_rectangle(&BaseDomain::unit_square(), 0.5).unwrap();
        assert!(matches!(refine_uniform_with_budget(&m, 20), Err(MeshError::VertexBudget { .. })));
    }
}
