//! Plain-text mesh format.
//!
//! ```text
//! vertices N triangles T edges E
//! x y            (N lines)
//! a b c          (T lines)
//! a b tag        (E lines, tag ∈ omega | omega_prime | trunc)
//! ```
//!
//! The obstacle description is not part of the format; the parser takes it
//! as an argument so refinement can still project boundary nodes.

use std::fmt::Write as _;

use super::{BoundaryEdge, EdgeTag, Mesh, Obstacle};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "vertices {} triangles {} edges {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.boundary_edges.len()
    );
    for p in &mesh.vertices {
        let _ = writeln!(out, "{:.16e} {:.16e}", p[0], p[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.as_str());
    }
    out
}

pub fn parse_mesh(text: &str, obstacle: Obstacle, trunc_radius: f64) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |n: usize, m: &str| Error::Parse(format!("mesh line {}: {m}", n + 1));
    let (n0, header) = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != "vertices" || h[2] != "triangles" || h[4] != "edges" {
        return Err(err(n0, "expected `vertices N triangles T edges E`"));
    }
    let count = |s: &str| s.parse::<usize>().map_err(|_| err(n0, "bad count"));
    let (nv, nt, ne) = (count(h[1])?, count(h[3])?, count(h[5])?);

    let mut vertices = Vec::with_capacity(nv);
    let mut triangles = Vec::with_capacity(nt);
    let mut boundary_edges = Vec::with_capacity(ne);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| err(n0, "missing vertex lines"))?;
        let f: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(n, "bad vertex"))?;
        if f.len() != 2 {
            return Err(err(n, "vertex needs two coordinates"));
        }
        vertices.push([f[0], f[1]]);
    }
    let index = |n: usize, s: &str| -> Result<usize> {
        let i: usize = s.parse().map_err(|_| err(n, "bad index"))?;
        if i >= nv {
            return Err(err(n, "vertex index out of range"));
        }
        Ok(i)
    };
    for _ in 0..nt {
        let (n, l) = lines.next().ok_or_else(|| err(n0, "missing triangle lines"))?;
        let p: Vec<&str> = l.split_whitespace().collect();
        if p.len() != 3 {
            return Err(err(n, "triangle needs three indices"));
        }
        triangles.push([index(n, p[0])?, index(n, p[1])?, index(n, p[2])?]);
    }
    for _ in 0..ne {
        let (n, l) = lines.next().ok_or_else(|| err(n0, "missing edge lines"))?;
        let p: Vec<&str> = l.split_whitespace().collect();
        if p.len() != 3 {
            return Err(err(n, "edge needs two indices and a tag"));
        }
        let tag = EdgeTag::parse(p[2]).ok_or_else(|| err(n, "unknown tag"))?;
        boundary_edges.push(BoundaryEdge { vertices: [index(n, p[0])?, index(n, p[1])?], tag });
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing content"));
    }
    Ok(Mesh { vertices, triangles, boundary_edges, obstacle, trunc_radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, tag_boundary, BoundarySpec, DomainSpec};

    #[test]
    fn round_trip_is_exact() {
        let spec = DomainSpec::disk(1.0, 4.0).with_grading(1.7);
        let mesh = tag_boundary(&build_mesh(&spec).unwrap(), &BoundarySpec::mixed(vec![(0.5, 2.5)], 1.0)).unwrap();
        let text = write_mesh(&mesh);
        assert!(text.starts_with("vertices 144 triangles 256 edges 32\n"));
        assert!(text.contains(" omega\n") && text.contains(" omega_prime\n") && text.contains(" trunc\n"));
        let back = parse_mesh(&text, spec.obstacle.clone(), 4.0).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn rejects_truncated_file() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 4.0)).unwrap();
        let text = write_mesh(&mesh);
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(parse_mesh(&cut, Obstacle::Disk { radius: 1.0 }, 4.0).is_err());
    }
}
