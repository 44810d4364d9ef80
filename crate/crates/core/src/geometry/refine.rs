use std::collections::HashMap;

use super::{norm, BoundaryEdge, EdgeTag, Mesh, Obstacle};
use crate::error::Result;

/// Uniform red refinement: every triangle is split into four by its edge
/// midpoints. Boundary edges split in two and keep their tag; new nodes on
/// the truncation circle, and on a disk obstacle, are projected onto the curve.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    mesh.check_invariants()?;
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.num_triangles());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.vertices;
        let m = mid(a, b, &mut vertices);
        let radius = match (e.tag, &mesh.obstacle) {
            (EdgeTag::Truncation, _) => Some(mesh.trunc_radius),
            (_, Obstacle::Disk { radius }) => Some(*radius),
            (_, Obstacle::Polygon { .. }) => None,
        };
        if let Some(r) = radius {
            let p = vertices[m];
            let s = r / norm(p);
            vertices[m] = [p[0] * s, p[1] * s];
        }
        boundary_edges.push(BoundaryEdge { vertices: [a, m], tag: e.tag });
        boundary_edges.push(BoundaryEdge { vertices: [m, b], tag: e.tag });
    }
    let refined =
        Mesh { vertices, triangles, boundary_edges, obstacle: mesh.obstacle.clone(), trunc_radius: mesh.trunc_radius };
    refined.check_invariants()?;
    Ok(refined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, tag_boundary, BoundarySpec, DomainSpec};
    use std::f64::consts::PI;

    #[test]
    fn quadruples_triangles_and_doubles_tagged_edges() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 4.0)).unwrap();
        let mesh = tag_boundary(&mesh, &BoundarySpec::mixed(vec![(0.0, PI)], 1.0)).unwrap();
        let fine = refine(&mesh).unwrap();
        assert_eq!(fine.num_triangles(), 1024);
        assert_eq!(fine.count_tag(EdgeTag::Omega), 2 * mesh.count_tag(EdgeTag::Omega));
        assert_eq!(fine.count_tag(EdgeTag::OmegaPrime), 2 * mesh.count_tag(EdgeTag::OmegaPrime));
        assert_eq!(fine.count_tag(EdgeTag::Truncation), 32);
    }

    #[test]
    fn area_approaches_exact_area() {
        let spec = DomainSpec::disk(1.0, 4.0);
        let exact = spec.exact_area();
        let mut mesh = build_mesh(&spec).unwrap();
        let mut err = (mesh.total_area() - exact).abs();
        for _ in 0..3 {
            mesh = refine(&mesh).unwrap();
            let e = (mesh.total_area() - exact).abs();
            assert!(e < err);
            err = e;
        }
    }

    #[test]
    fn mesh_size_roughly_halves() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 4.0).with_grading(1.5)).unwrap();
        let fine = refine(&mesh).unwrap();
        let ratio = fine.mesh_size() / mesh.mesh_size();
        assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
    }
}
