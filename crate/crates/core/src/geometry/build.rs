use std::f64::consts::PI;

use super::{norm, polygon_area, signed_area, BoundaryEdge, DomainSpec, EdgeTag, Mesh, Obstacle, Point};
use crate::error::{Error, Result};

/// Builds a structured mesh of the truncated domain.
///
/// The obstacle boundary carries `OmegaPrime` tags; use
/// [`tag_boundary`](super::tag_boundary) to mark the Robin part.
pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    spec.validate()?;
    let scale = 1usize << spec.refinement_level;
    let n_theta = spec.angular_cells * scale;
    let n_r = spec.radial_cells * scale;
    let layers = radial_parameters(spec, n_r)?;

    let inner: Vec<Point> = match &spec.obstacle {
        Obstacle::Disk { radius } => (0..n_theta)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n_theta as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect(),
        Obstacle::Polygon { vertices } => polygon_nodes(vertices, spec.angular_cells, scale)?,
    };
    let r_out = spec.trunc_radius;
    let outer: Vec<Point> = inner
        .iter()
        .map(|&p| {
            let r = norm(p);
            [r_out * p[0] / r, r_out * p[1] / r]
        })
        .collect();

    let mut vertices = Vec::with_capacity(n_theta * (n_r + 1));
    for (j, &t) in layers.iter().enumerate() {
        for i in 0..n_theta {
            let p = if j == 0 {
                inner[i]
            } else if j == n_r {
                outer[i]
            } else {
                match &spec.obstacle {
                    Obstacle::Disk { radius } => {
                        let r = radius + (r_out - radius) * t;
                        let theta = 2.0 * PI * i as f64 / n_theta as f64;
                        [r * theta.cos(), r * theta.sin()]
                    }
                    Obstacle::Polygon { .. } => {
                        [inner[i][0] + (outer[i][0] - inner[i][0]) * t, inner[i][1] + (outer[i][1] - inner[i][1]) * t]
                    }
                }
            };
            vertices.push(p);
        }
    }

    let id = |i: usize, j: usize| j * n_theta + (i % n_theta);
    let mut triangles = Vec::with_capacity(2 * n_theta * n_r);
    for j in 0..n_r {
        for i in 0..n_theta {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v11, v10]);
            triangles.push([v00, v01, v11]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * n_theta);
    for i in 0..n_theta {
        // oriented as traversed by the adjacent triangle
        boundary_edges.push(BoundaryEdge { vertices: [id(i + 1, 0), id(i, 0)], tag: EdgeTag::OmegaPrime });
    }
    for i in 0..n_theta {
        boundary_edges.push(BoundaryEdge { vertices: [id(i, n_r), id(i + 1, n_r)], tag: EdgeTag::Truncation });
    }

    let mesh = Mesh { vertices, triangles, boundary_edges, obstacle: spec.obstacle.clone(), trunc_radius: r_out };
    if let Some(t) = (0..mesh.num_triangles()).find(|&t| !(mesh.signed_area(t) > 0.0)) {
        return Err(Error::InvalidDomain(format!(
            "generated triangle {t} is inverted; is the polygon star-shaped about the origin?"
        )));
    }
    Ok(mesh)
}

/// Radial layer parameters `t_j ∈ [0, 1]`, `j = 0..=n_r`.
fn radial_parameters(spec: &DomainSpec, n_r: usize) -> Result<Vec<f64>> {
    let r0 = spec.obstacle.outer_radius();
    let span = spec.trunc_radius - r0;
    let g = spec.grading;
    // breakpoints (uniform parameter, graded parameter), snapped to level-0 layers
    let base = spec.radial_cells as f64;
    let mut knots: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut radii = spec.align_radii.clone();
    radii.sort_by(f64::total_cmp);
    for rho in radii {
        let s = ((rho - r0) / span).powf(1.0 / g);
        let snapped = ((s * base).round().clamp(1.0, base - 1.0)) / base;
        if snapped <= knots.last().unwrap().0 {
            return Err(Error::InvalidDomain(format!(
                "aligned radius {rho} cannot be resolved with {} radial cells",
                spec.radial_cells
            )));
        }
        knots.push((snapped, s));
    }
    knots.push((1.0, 1.0));
    Ok((0..=n_r)
        .map(|j| {
            let u = j as f64 / n_r as f64;
            let k = knots.windows(2).position(|w| u <= w[1].0).unwrap_or(knots.len() - 2);
            let ((u0, s0), (u1, s1)) = (knots[k], knots[k + 1]);
            let s = if j == n_r { 1.0 } else { s0 + (s1 - s0) * (u - u0) / (u1 - u0) };
            s.powf(g)
        })
        .collect())
}

/// Nodes along a polygon boundary, including every corner, counter-clockwise.
fn polygon_nodes(vertices: &[Point], base_cells: usize, scale: usize) -> Result<Vec<Point>> {
    let mut v = vertices.to_vec();
    if polygon_area(&v) < 0.0 {
        v.reverse();
    }
    let n = v.len();
    let lengths: Vec<f64> = (0..n).map(|i| super::dist(v[i], v[(i + 1) % n])).collect();
    let perimeter: f64 = lengths.iter().sum();
    // largest-remainder allocation with at least one cell per side
    let ideal: Vec<f64> = lengths.iter().map(|l| l / perimeter * base_cells as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| (x.floor() as usize).max(1)).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
    let mut k = 0;
    while assigned < base_cells {
        counts[order[k % n]] += 1;
        assigned += 1;
        k += 1;
    }
    while assigned > base_cells {
        // only possible when the one-per-side minimum inflated the total
        let i = (0..n)
            .filter(|&i| counts[i] > 1)
            .max_by(|&a, &b| (counts[a] as f64 - ideal[a]).total_cmp(&(counts[b] as f64 - ideal[b])).then(b.cmp(&a)));
        match i {
            Some(i) => {
                counts[i] -= 1;
                assigned -= 1;
            }
            None => break,
        }
    }
    let mut nodes = Vec::with_capacity(base_cells * scale);
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let m = counts[i] * scale;
        for k in 0..m {
            let t = k as f64 / m as f64;
            nodes.push([p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]);
        }
    }
    // star-shapedness about the origin: polar angle must increase monotonically
    let turn: f64 = (0..nodes.len())
        .map(|i| {
            let (a, b) = (nodes[i], nodes[(i + 1) % nodes.len()]);
            signed_area([0.0, 0.0], a, b)
        })
        .fold(f64::INFINITY, f64::min);
    if !(turn > 0.0) {
        return Err(Error::InvalidDomain("polygon obstacle is not star-shaped about the origin".into()));
    }
    // start at the node with the smallest polar angle so layering is deterministic
    let start = (0..nodes.len()).min_by(|&a, &b| super::angle(nodes[a]).total_cmp(&super::angle(nodes[b]))).unwrap();
    nodes.rotate_left(start);
    Ok(nodes)
}
