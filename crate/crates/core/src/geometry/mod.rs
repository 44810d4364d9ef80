//! Truncated exterior domains: specification, meshing, refinement and boundary tags.

mod build;
mod io;
mod refine;
mod tagging;

use std::collections::HashMap;
use std::f64::consts::PI;

pub use build::build_mesh;
pub use io::{parse_mesh, write_mesh};
pub use refine::refine;
pub use tagging::{tag_boundary, BoundarySpec};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Shape removed from the disk of radius `trunc_radius`. Centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Disk {
        radius: f64,
    },
    /// Simple polygon, star-shaped with respect to the origin.
    Polygon {
        vertices: Vec<Point>,
    },
}

impl Obstacle {
    /// Largest distance of the obstacle boundary from the origin.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Obstacle::Disk { radius } => *radius,
            Obstacle::Polygon { vertices } => vertices.iter().map(|v| norm(*v)).fold(0.0, f64::max),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Obstacle::Disk { radius } => PI * radius * radius,
            Obstacle::Polygon { vertices } => polygon_area(vertices).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub obstacle: Obstacle,
    pub trunc_radius: f64,
    pub refinement_level: u32,
    /// Radial grading exponent; values above 1 cluster layers toward the obstacle.
    pub grading: f64,
    /// Angular cells at level 0.
    pub angular_cells: usize,
    /// Radial layers at level 0.
    pub radial_cells: usize,
    /// Radii that must coincide with mesh circles (disk obstacles only), e.g.
    /// jump locations of a piecewise constant potential.
    pub align_radii: Vec<f64>,
}

impl DomainSpec {
    pub fn disk(radius: f64, trunc_radius: f64) -> Self {
        DomainSpec {
            obstacle: Obstacle::Disk { radius },
            trunc_radius,
            refinement_level: 0,
            grading: 1.0,
            angular_cells: 16,
            radial_cells: 8,
            align_radii: Vec::new(),
        }
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.refinement_level = level;
        self
    }

    pub fn with_grading(mut self, grading: f64) -> Self {
        self.grading = grading;
        self
    }

    pub fn with_cells(mut self, angular: usize, radial: usize) -> Self {
        self.angular_cells = angular;
        self.radial_cells = radial;
        self
    }

    pub fn with_align_radii(mut self, radii: Vec<f64>) -> Self {
        self.align_radii = radii;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDomain(m));
        if !(self.grading >= 1.0) || !self.grading.is_finite() {
            return bad(format!("grading must be >= 1, got {}", self.grading));
        }
        if self.angular_cells < 3 || self.radial_cells < 1 {
            return bad(format!(
                "need at least 3 angular and 1 radial cell, got {}x{}",
                self.angular_cells, self.radial_cells
            ));
        }
        if self.refinement_level > 12 {
            return bad(format!("refinement level {} is unreasonably large", self.refinement_level));
        }
        match &self.obstacle {
            Obstacle::Disk { radius } => {
                if !(*radius > 0.0) {
                    return bad(format!("obstacle radius must be positive, got {radius}"));
                }
            }
            Obstacle::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon obstacle needs at least 3 vertices".into());
                }
                if self.angular_cells < vertices.len() {
                    return bad(format!(
                        "angular cells ({}) fewer than polygon vertices ({})",
                        self.angular_cells,
                        vertices.len()
                    ));
                }
                if !self.align_radii.is_empty() {
                    return bad("aligned radii are only supported for disk obstacles".into());
                }
            }
        }
        let r_obs = self.obstacle.outer_radius();
        if !(self.trunc_radius > r_obs) {
            return bad(format!(
                "obstacle (extent {r_obs}) is not strictly inside the truncation disk of radius {}",
                self.trunc_radius
            ));
        }
        for &rho in &self.align_radii {
            if !(rho > r_obs && rho < self.trunc_radius) {
                return bad(format!("aligned radius {rho} not inside ({r_obs}, {})", self.trunc_radius));
            }
        }
        Ok(())
    }

    /// Exact area of the truncated domain.
    pub fn exact_area(&self) -> f64 {
        PI * self.trunc_radius * self.trunc_radius - self.obstacle.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    /// Robin / Neumann part ω of the obstacle boundary.
    Omega,
    /// Dirichlet part ω′ of the obstacle boundary.
    OmegaPrime,
    /// Artificial outer circle, always Dirichlet.
    Truncation,
}

impl EdgeTag {
    pub fn is_obstacle(self) -> bool {
        !matches!(self, EdgeTag::Truncation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Omega => "omega",
            EdgeTag::OmegaPrime => "omega_prime",
            EdgeTag::Truncation => "trunc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "omega" => Some(EdgeTag::Omega),
            "omega_prime" => Some(EdgeTag::OmegaPrime),
            "trunc" => Some(EdgeTag::Truncation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
}

/// Conforming P1 triangulation of a truncated exterior domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Curves used to project new boundary nodes on refinement.
    pub obstacle: Obstacle,
    pub trunc_radius: f64,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(i, j)| dist(self.vertices[i], self.vertices[j]))
            .fold(0.0, f64::max)
    }

    pub fn edges_with_tag(&self, tag: EdgeTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn count_tag(&self, tag: EdgeTag) -> usize {
        self.edges_with_tag(tag).count()
    }

    /// Sorted, deduplicated vertices touched by edges with any of the tags.
    pub fn vertices_on(&self, tags: &[EdgeTag]) -> Vec<usize> {
        let mut v: Vec<usize> =
            self.boundary_edges.iter().filter(|e| tags.contains(&e.tag)).flat_map(|e| e.vertices).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn obstacle_vertices(&self) -> Vec<usize> {
        self.vertices_on(&[EdgeTag::Omega, EdgeTag::OmegaPrime])
    }

    /// Checks positivity, conformity and the boundary tag partition.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDomain(m));
        for t in 0..self.num_triangles() {
            let tri = self.triangles[t];
            if tri.iter().any(|&v| v >= self.num_vertices()) {
                return bad(format!("triangle {t} references a missing vertex"));
            }
            if !(self.signed_area(t) > 0.0) {
                return bad(format!("triangle {t} has non-positive area {}", self.signed_area(t)));
            }
        }
        // every undirected edge: one triangle on the boundary, two in the interior,
        // and the two interior neighbours traverse it in opposite directions
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (i, j) in [(a, b), (b, c), (c, a)] {
                *directed.entry((i, j)).or_default() += 1;
            }
        }
        let mut boundary_from_triangles: Vec<(usize, usize)> = Vec::new();
        for (&(i, j), &count) in &directed {
            if count > 1 {
                return bad(format!("edge ({i}, {j}) traversed {count} times in the same direction"));
            }
            if !directed.contains_key(&(j, i)) {
                boundary_from_triangles.push((i.min(j), i.max(j)));
            }
        }
        boundary_from_triangles.sort_unstable();
        let mut tagged: Vec<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|e| (e.vertices[0].min(e.vertices[1]), e.vertices[0].max(e.vertices[1])))
            .collect();
        tagged.sort_unstable();
        if tagged.windows(2).any(|w| w[0] == w[1]) {
            return bad("boundary edge listed twice".into());
        }
        if tagged != boundary_from_triangles {
            return bad(format!(
                "tagged boundary ({} edges) does not match triangulation boundary ({} edges)",
                tagged.len(),
                boundary_from_triangles.len()
            ));
        }
        let tol = 1e-9 * self.trunc_radius;
        for e in &self.boundary_edges {
            let on_outer = e.vertices.iter().all(|&v| (norm(self.vertices[v]) - self.trunc_radius).abs() < tol);
            if on_outer != (e.tag == EdgeTag::Truncation) {
                return bad(format!("edge {:?} tagged {:?} inconsistently with its position", e.vertices, e.tag));
            }
        }
        Ok(())
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

pub(crate) fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Polar angle in `[0, 2π)`.
pub fn angle(p: Point) -> f64 {
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Euclidean distance between two points.
pub fn dist_points(p: Point, q: Point) -> f64 {
    dist(p, q)
}

/// Distance from the origin.
pub fn norm_point(p: Point) -> f64 {
    norm(p)
}
