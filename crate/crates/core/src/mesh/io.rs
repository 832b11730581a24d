//! Plain-text mesh format.
//!
//! ```text
//! V T E
//! x y            (V lines)
//! i j k region   (T lines)
//! i j tag        (E lines)
//! ```
//!
//! Coordinates use the shortest decimal form that parses back to the same
//! `f64`, so a write/read cycle is bit-exact.

use super::{MeshError, TriMesh};
use std::io::{BufRead, Write};

pub fn write_mesh<W: Write>(mesh: &TriMesh, mut out: W) -> Result<(), MeshError> {
    writeln!(
        out,
        "{} {} {}",
        mesh.vertex_count(),
        mesh.triangle_count(),
        mesh.boundary_edges.len()
    )?;
    for [x, y] in &mesh.vertices {
        writeln!(out, "{x:?} {y:?}")?;
    }
    for (t, [a, b, c]) in mesh.triangles.iter().enumerate() {
        writeln!(out, "{a} {b} {c} {}", mesh.regions[t])?;
    }
    for ([a, b], tag) in &mesh.boundary_edges {
        writeln!(out, "{a} {b} {tag}")?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn fields<const N: usize>(line_no: usize, text: &str) -> Result<[&str; N], MeshError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| parse_err(line_no, format!("expected {N} fields, found {}", p.len())))
}

fn num<T: std::str::FromStr>(line_no: usize, s: &str) -> Result<T, MeshError>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| parse_err(line_no, format!("{s:?}: {e}")))
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<TriMesh, MeshError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), MeshError> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(parse_err(0, format!("unexpected end of file while reading {what}"))),
        }
    };
    let (n, header) = next("header")?;
    let [v, t, e] = fields::<3>(n, &header)?;
    let (nv, nt, ne): (usize, usize, usize) = (num(n, v)?, num(n, t)?, num(n, e)?);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next("vertices")?;
        let [x, y] = fields::<2>(n, &l)?;
        vertices.push([num(n, x)?, num(n, y)?]);
    }
    let index = |n: usize, s: &str| -> Result<usize, MeshError> {
        let i: usize = num(n, s)?;
        if i >= nv {
            return Err(parse_err(n, format!("vertex index {i} out of range")));
        }
        Ok(i)
    };
    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = next("triangles")?;
        let [a, b, c, tag] = fields::<4>(n, &l)?;
        triangles.push([index(n, a)?, index(n, b)?, index(n, c)?]);
        regions.push(tag.parse().map_err(|m: String| parse_err(n, m))?);
    }
    let mut boundary_edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (n, l) = next("boundary edges")?;
        let [a, b, tag] = fields::<3>(n, &l)?;
        boundary_edges.push(([index(n, a)?, index(n, b)?], tag.parse().map_err(|m: String| parse_err(n, m))?));
    }
    let mut mesh = TriMesh {
        vertices,
        triangles,
        regions,
        boundary_edges,
        gamma_vertex_ids: Vec::new(),
    };
    mesh.gamma_vertex_ids = mesh.compute_gamma_vertices();
    Ok(mesh)
}
