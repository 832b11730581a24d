//! Structured tensor grids per rectangle, glued through shared grid lines.
//!
//! The grid lines of the base rectangle contain every passage edge and the
//! passage's own interior lines, so each opening is a union of whole element
//! edges; the room's lines contain the passage lines for the same reason
//! at the passage top. Away from the passages, lines are graded
//! geometrically (ratio 2) up to the target size.

use super::{MeshError, Region, TriMesh, DEFAULT_ASPECT_LIMIT, DEFAULT_VERTEX_BUDGET};
use crate::geometry::{BaseDomain, PerturbedDomain, Rect};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub target_h: f64,
    /// Longest over shortest edge allowed in passage triangles.
    pub aspect_limit: f64,
    pub vertex_budget: usize,
}

impl MeshOptions {
    pub fn new(target_h: f64) -> Self {
        Self {
            target_h,
            aspect_limit: DEFAULT_ASPECT_LIMIT,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
        }
    }

    fn check(&self) -> Result<(), MeshError> {
        if !(self.target_h > 0.0 && self.target_h.is_finite()) {
            return Err(MeshError::InvalidTarget(self.target_h));
        }
        if !(self.aspect_limit > 1.0) {
            return Err(MeshError::InvalidAspectLimit(self.aspect_limit));
        }
        Ok(())
    }
}

fn cells(length: f64, h: f64) -> usize {
    ((length / h) - 1e-9).ceil().max(1.0) as usize
}

/// `n` equal cells on `[a, b]`, endpoints reproduced exactly.
fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    v.push(b);
    v
}

/// Offsets `s0, s0 + 2s0, s0 + 2s0 + 4s0, …` with steps capped at `target`,
/// stopping once a step reaches `target` or the offset would exceed `cap`.
fn graded_offsets(s0: f64, target: f64, cap: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut step = s0.min(target);
    let mut pos = 0.0;
    loop {
        pos += step;
        if pos > cap {
            break;
        }
        out.push(pos);
        if step >= target {
            break;
        }
        step = (2.0 * step).min(target);
    }
    out
}

/// Sorts, drops exact duplicates, and fills gaps wider than `h` uniformly.
fn finish_lines(mut pts: Vec<f64>, h: f64) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let n = cells(w[1] - w[0], h);
        out.extend(uniform(w[0], w[1], n).into_iter().take(n));
    }
    out.extend(pts.last());
    out.iter_mut().for_each(|v| {
        if *v == 0.0 {
            *v = 0.0; // normalizes -0.0
        }
    });
    out
}

struct Opening {
    lo: f64,
    hi: f64,
    /// Lines across the opening, `lo` and `hi` included.
    lines: Vec<f64>,
    spacing: f64,
}

impl Opening {
    fn new(lo: f64, hi: f64, h: f64) -> Self {
        let n = cells(hi - lo, h).max(2);
        Self {
            lo,
            hi,
            lines: uniform(lo, hi, n),
            spacing: (hi - lo) / n as f64,
        }
    }
}

/// Lines on `[a, b]` containing every opening's lines plus graded halos
/// around them. Openings must be sorted and disjoint, inside `[a, b]`.
fn lines_with_openings(a: f64, b: f64, openings: &[Opening], h: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    for (k, op) in openings.iter().enumerate() {
        pts.extend(&op.lines);
        let left_cap = match k {
            0 => 0.9 * (op.lo - a),
            _ => 0.45 * (op.lo - openings[k - 1].hi),
        };
        let right_cap = match openings.get(k + 1) {
            None => 0.9 * (b - op.hi),
            Some(next) => 0.45 * (next.lo - op.hi),
        };
        pts.extend(graded_offsets(op.spacing, h, left_cap).into_iter().map(|o| op.lo - o));
        pts.extend(graded_offsets(op.spacing, h, right_cap).into_iter().map(|o| op.hi + o));
    }
    finish_lines(pts, h)
}

/// Lines on `[a, b]` refined towards `a` from spacing `s0`.
fn lines_graded_from(a: f64, b: f64, s0: f64, h: f64) -> Vec<f64> {
    let len = (b - a).abs();
    let dir = if b >= a { 1.0 } else { -1.0 };
    let mut pts = vec![a, b];
    pts.extend(graded_offsets(s0, h, 0.9 * len).into_iter().map(|o| a + dir * o));
    finish_lines(pts, h)
}

struct Block {
    xs: Vec<f64>,
    ys: Vec<f64>,
    region: Region,
}

/// Mesh of the base rectangle alone with a uniform grid.
pub fn mesh_rectangle(base: &BaseDomain, target_h: f64) -> Result<TriMesh, MeshError> {
    let opts = MeshOptions::new(target_h);
    opts.check()?;
    let r = base.rect();
    let block = Block {
        xs: uniform(r.xmin, r.xmax, cells(r.width(), target_h)),
        ys: uniform(r.ymin, r.ymax, cells(r.height(), target_h)),
        region: Region::Omega,
    };
    assemble_blocks(vec![block], opts.vertex_budget)
}

/// Conforming mesh of the perturbed domain.
pub fn mesh_perturbed_domain(domain: &PerturbedDomain, opts: &MeshOptions) -> Result<TriMesh, MeshError> {
    opts.check()?;
    let h = opts.target_h;
    let base = domain.base.rect();
    let openings: Vec<Opening> = domain.passages.iter().map(|p| Opening::new(p.xmin, p.xmax, h)).collect();
    let min_spacing = openings.iter().map(|o| o.spacing).fold(h, f64::min);

    let mut blocks = vec![Block {
        xs: lines_with_openings(base.xmin, base.xmax, &openings, h),
        ys: lines_graded_from(base.ymax, base.ymin, min_spacing, h),
        region: Region::Omega,
    }];
    let stretch = (opts.aspect_limit * opts.aspect_limit - 1.0).sqrt();
    for (k, &i) in domain.indices.iter().enumerate() {
        let p: &Rect = &domain.passages[k];
        let op = &openings[k];
        let dy = h.min(op.spacing * stretch * (1.0 - 1e-9));
        blocks.push(Block {
            xs: op.lines.clone(),
            ys: uniform(p.ymin, p.ymax, cells(p.height(), dy)),
            region: Region::Passage(i),
        });
        let room: &Rect = &domain.rooms[k];
        blocks.push(Block {
            xs: lines_with_openings(room.xmin, room.xmax, std::slice::from_ref(op), h),
            ys: lines_graded_from(room.ymin, room.ymax, op.spacing, h),
            region: Region::Room(i),
        });
    }
    assemble_blocks(blocks, opts.vertex_budget)
}

fn assemble_blocks(mut blocks: Vec<Block>, budget: usize) -> Result<TriMesh, MeshError> {
    for b in &mut blocks {
        b.ys.sort_by(f64::total_cmp);
    }
    let needed: usize = blocks.iter().map(|b| b.xs.len() * b.ys.len()).sum();
    if needed > budget {
        return Err(MeshError::VertexBudget { needed, budget });
    }
    let mut coords: Vec<[f64; 2]> = Vec::with_capacity(needed);
    for b in &blocks {
        for &x in &b.xs {
            for &y in &b.ys {
                coords.push([x, y]);
            }
        }
    }
    coords.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    coords.dedup();
    let find = |p: [f64; 2]| -> usize {
        coords
            .binary_search_by(|c| c[0].total_cmp(&p[0]).then(c[1].total_cmp(&p[1])))
            .expect("grid vertex present")
    };

    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for b in &blocks {
        let ny = b.ys.len();
        let ids: Vec<usize> = b.xs.iter().flat_map(|&x| b.ys.iter().map(move |&y| [x, y])).map(find).collect();
        for i in 0..b.xs.len() - 1 {
            for j in 0..ny - 1 {
                let v00 = ids[i * ny + j];
                let v10 = ids[(i + 1) * ny + j];
                let v11 = ids[(i + 1) * ny + j + 1];
                let v01 = ids[i * ny + j + 1];
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
                regions.push(b.region);
                regions.push(b.region);
            }
        }
    }
    Ok(TriMesh::from_parts(coords, triangles, regions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_perturbed_domain, exponents_to_params, ShapeSpec};

    #[test]
    fn unit_square_counts() {
        let m = mesh_rectangle(&BaseDomain::unit_square(), 0.5).unwrap();
        assert_eq!(m.vertex_count(), 9);
        assert_eq!(m.triangle_count(), 8);
        assert_eq!(m.gamma_vertex_ids.len(), 3);
        m.validate().unwrap();
    }

    #[test]
    fn graded_offsets_double() {
        let o = graded_offsets(0.01, 0.05, 1.0);
        assert_eq!(o.len(), 4);
        assert!((o[3] - 0.12).abs() < 1e-15);
        assert!(graded_offsets(0.01, 0.05, 0.005).is_empty());
    }

    #[test]
    fn thin_passages_are_resolved() {
        let base = BaseDomain::unit_square();
        let params = exponents_to_params(0.25, 4.0, 0.0).unwrap();
        let dom = build_perturbed_domain(&base, &params, &ShapeSpec::canonical()).unwrap();
        let m = mesh_perturbed_domain(&dom, &MeshOptions::new(1.0 / 16.0)).unwrap();
        m.validate().unwrap();
        let q = m.quality();
        assert!(q.min_edge_length <= dom.passages[0].width() / 2.0);
        assert!(q.max_passage_aspect_ratio <= 8.0);
        let total = m.total_area();
        assert!((total - dom.area()).abs() <= 1e-10 * dom.area());
    }
}
