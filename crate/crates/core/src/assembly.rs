//! P1 finite-element assembly of the quadratic forms and elimination of
//! Dirichlet degrees of freedom.
//!
//! Contributions are accumulated triangle by triangle in ascending order and
//! each local entry is computed once for `i ≤ j` and mirrored, so assembled
//! matrices are exactly symmetric and bit-reproducible.

use crate::error::{Error, Result};
use crate::fields::{CoefficientField, OperatorField, PotentialSpec};
use crate::geometry::{EdgeTag, Mesh, Point};
use crate::sparse::{CsrMatrix, Triplets};

/// Gradients of the three barycentric basis functions and the triangle area.
fn p1_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        *gi = [(p[j][1] - p[k][1]) / area2, (p[k][0] - p[j][0]) / area2];
    }
    (g, 0.5 * area2)
}

fn corners(mesh: &Mesh, t: usize) -> [Point; 3] {
    let [a, b, c] = mesh.triangles[t];
    [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]]
}

fn push_symmetric(t: &mut Triplets, idx: &[usize], local: impl Fn(usize, usize) -> f64) {
    for a in 0..idx.len() {
        for b in a..idx.len() {
            let v = local(a, b);
            t.push(idx[a], idx[b], v);
            if a != b {
                t.push(idx[b], idx[a], v);
            }
        }
    }
}

/// Consistent P1 mass matrix `∫ φᵢ φⱼ`.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut t = Triplets::new(mesh.num_vertices());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(k);
        push_symmetric(&mut t, tri, |a, b| area / 12.0 * if a == b { 2.0 } else { 1.0 });
    }
    t.into_csr()
}

/// `∫ (a ∇φⱼ)·∇φᵢ` with the coefficient sampled at the barycenter.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &CoefficientField) -> CsrMatrix {
    let mut t = Triplets::new(mesh.num_vertices());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(corners(mesh, k));
        let [a11, a12, a22] = coeff.evaluate(mesh.barycenter(k));
        push_symmetric(&mut t, tri, |a, b| {
            let (ga, gb) = (g[a], g[b]);
            area * (ga[0] * (a11 * gb[0] + a12 * gb[1]) + ga[1] * (a12 * gb[0] + a22 * gb[1]))
        });
    }
    t.into_csr()
}

/// `∫ V φᵢ φⱼ` with `V` sampled at the barycenter of each triangle.
pub fn assemble_potential(mesh: &Mesh, potential: &PotentialSpec) -> CsrMatrix {
    let mut t = Triplets::new(mesh.num_vertices());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let v = potential.evaluate(mesh.barycenter(k));
        if v == 0.0 {
            continue;
        }
        let area = mesh.signed_area(k);
        push_symmetric(&mut t, tri, |a, b| v * (area / 12.0 * if a == b { 2.0 } else { 1.0 }));
    }
    t.into_csr()
}

/// `α ∫_ω φᵢ φⱼ ds` over the edges tagged `Omega`. Empty when `α = 0`.
pub fn assemble_robin_boundary(mesh: &Mesh, alpha: f64) -> CsrMatrix {
    if alpha == 0.0 {
        return CsrMatrix::zeros(mesh.num_vertices());
    }
    edge_mass(mesh, alpha, &[EdgeTag::Omega])
}

/// `∫_{∂Ω} φᵢ φⱼ ds` over the whole obstacle boundary (ω and ω′).
pub fn assemble_obstacle_boundary_mass(mesh: &Mesh) -> CsrMatrix {
    edge_mass(mesh, 1.0, &[EdgeTag::Omega, EdgeTag::OmegaPrime])
}

fn edge_mass(mesh: &Mesh, alpha: f64, tags: &[EdgeTag]) -> CsrMatrix {
    let mut t = Triplets::new(mesh.num_vertices());
    for e in mesh.boundary_edges.iter().filter(|e| tags.contains(&e.tag)) {
        let [i, j] = e.vertices;
        let (p, q) = (mesh.vertices[i], mesh.vertices[j]);
        let len = (p[0] - q[0]).hypot(p[1] - q[1]);
        push_symmetric(&mut t, &[i, j], |a, b| alpha * (len / 6.0 * if a == b { 2.0 } else { 1.0 }));
    }
    t.into_csr()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Obstacle and truncation vertices constrained.
    Dirichlet,
    /// Vertices on the closure of ω′ and on the truncation circle constrained.
    RobinMixed,
}

/// Partition of the vertices into free and constrained unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub n_vertices: usize,
    /// Ascending vertex indices of the free unknowns.
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, mode: ConstraintMode) -> Result<Self> {
        let constrained = match mode {
            ConstraintMode::Dirichlet => mesh.vertices_on(&[EdgeTag::Omega, EdgeTag::OmegaPrime, EdgeTag::Truncation]),
            ConstraintMode::RobinMixed => {
                if mesh.count_tag(EdgeTag::Omega) == 0 {
                    return Err(Error::InvalidBoundary("Robin/mixed problem requested with empty omega".into()));
                }
                mesh.vertices_on(&[EdgeTag::OmegaPrime, EdgeTag::Truncation])
            }
        };
        let mut is_constrained = vec![false; mesh.num_vertices()];
        constrained.iter().for_each(|&v| is_constrained[v] = true);
        let free = (0..mesh.num_vertices()).filter(|&v| !is_constrained[v]).collect();
        Ok(DofMap { n_vertices: mesh.num_vertices(), free, constrained })
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Embeds a free-DOF vector into a full vertex vector (zeros on constrained vertices).
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_vertices];
        for (&v, &x) in self.free.iter().zip(u) {
            full[v] = x;
        }
        full
    }

    /// Position of each vertex in the free list, if free.
    pub fn free_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.n_vertices];
        for (k, &v) in self.free.iter().enumerate() {
            idx[v] = Some(k);
        }
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormKind {
    Dirichlet,
    Neumann,
    Robin { alpha: f64 },
}

/// Full-vertex matrices of one quadratic form before constraints.
#[derive(Debug, Clone)]
pub struct FormParts {
    pub stiffness: CsrMatrix,
    pub potential: CsrMatrix,
    pub boundary: CsrMatrix,
    pub mass: CsrMatrix,
}

impl FormParts {
    pub fn assemble(mesh: &Mesh, field: &OperatorField, robin_alpha: f64) -> Self {
        FormParts {
            stiffness: assemble_stiffness(mesh, &field.coefficient),
            potential: assemble_potential(mesh, &field.potential),
            boundary: assemble_robin_boundary(mesh, robin_alpha),
            mass: assemble_mass(mesh),
        }
    }
}

/// Pencil `(A, M)` on the free unknowns.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    pub dof: DofMap,
    pub kind: FormKind,
}

/// Restricts `stiffness + potential + boundary` and the mass matrix to the free unknowns of `mode`.
pub fn apply_constraints(parts: &FormParts, mesh: &Mesh, mode: ConstraintMode, alpha: f64) -> Result<AssembledSystem> {
    let n = mesh.num_vertices();
    for m in [&parts.stiffness, &parts.potential, &parts.boundary, &parts.mass] {
        if m.dim() != n {
            return Err(Error::Dimension(format!("matrix of size {} for a mesh with {n} vertices", m.dim())));
        }
    }
    let dof = DofMap::new(mesh, mode)?;
    let full = parts.stiffness.add(&parts.potential)?.add(&parts.boundary)?;
    let kind = match mode {
        ConstraintMode::Dirichlet => FormKind::Dirichlet,
        ConstraintMode::RobinMixed => FormKind::Robin { alpha },
    };
    Ok(AssembledSystem { a: full.restrict(&dof.free), m: parts.mass.restrict(&dof.free), dof, kind })
}

/// Dirichlet realization: obstacle and truncation constrained.
pub fn assemble_dirichlet(mesh: &Mesh, field: &OperatorField) -> Result<AssembledSystem> {
    apply_constraints(&FormParts::assemble(mesh, field, 0.0), mesh, ConstraintMode::Dirichlet, 0.0)
}

/// Robin on the `Omega` edges, Dirichlet on `OmegaPrime` and the truncation circle.
pub fn assemble_mixed(mesh: &Mesh, field: &OperatorField, alpha: f64) -> Result<AssembledSystem> {
    apply_constraints(&FormParts::assemble(mesh, field, alpha), mesh, ConstraintMode::RobinMixed, alpha)
}

/// Neumann realization assembled directly: only the truncation circle is
/// constrained and no boundary term is formed.
pub fn assemble_neumann(mesh: &Mesh, field: &OperatorField) -> Result<AssembledSystem> {
    let n = mesh.num_vertices();
    let truncation = mesh.vertices_on(&[EdgeTag::Truncation]);
    let mut constrained = vec![false; n];
    truncation.iter().for_each(|&v| constrained[v] = true);
    let free: Vec<usize> = (0..n).filter(|&v| !constrained[v]).collect();
    let dof = DofMap { n_vertices: n, free, constrained: truncation };
    let k = assemble_stiffness(mesh, &field.coefficient);
    let v = assemble_potential(mesh, &field.potential);
    let a = k.add(&v)?.add(&CsrMatrix::zeros(n))?;
    let m = assemble_mass(mesh);
    Ok(AssembledSystem { a: a.restrict(&dof.free), m: m.restrict(&dof.free), dof, kind: FormKind::Neumann })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Ball;
    use crate::geometry::{build_mesh, tag_boundary, BoundaryEdge, BoundarySpec, DomainSpec, Obstacle};
    use std::f64::consts::PI;

    fn unit_triangle() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![BoundaryEdge { vertices: [0, 1], tag: EdgeTag::Omega }],
            obstacle: Obstacle::Disk { radius: 0.1 },
            trunc_radius: 10.0,
        }
    }

    #[test]
    fn reference_mass() {
        let m = assemble_mass(&unit_triangle()).to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert_eq!(m[(i, j)], expected);
            }
        }
    }

    #[test]
    fn reference_stiffness() {
        let k = assemble_stiffness(&unit_triangle(), &CoefficientField::identity()).to_dense();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k[(i, j)], expected[i][j]);
            }
        }
    }

    #[test]
    fn reference_edge_mass() {
        let mut mesh = unit_triangle();
        mesh.vertices[1] = [3.0, 0.0];
        let b = assemble_robin_boundary(&mesh, 1.0).to_dense();
        let l = 3.0;
        assert_eq!(b[(0, 0)], l / 6.0 * 2.0);
        assert_eq!(b[(0, 1)], l / 6.0);
        assert_eq!(b[(1, 1)], l / 6.0 * 2.0);
        assert_eq!(b[(2, 2)], 0.0);
        assert_eq!(assemble_robin_boundary(&mesh, 0.0).nnz(), 0);
    }

    fn well_mesh() -> Mesh {
        let spec = DomainSpec::disk(1.0, 4.0).with_grading(1.5).with_align_radii(vec![2.0]);
        tag_boundary(&build_mesh(&spec).unwrap(), &BoundarySpec::mixed(vec![(0.0, PI)], 1.0)).unwrap()
    }

    #[test]
    fn mass_sums_to_area_and_kernel_of_stiffness() {
        let mesh = well_mesh();
        let m = assemble_mass(&mesh);
        assert!((m.sum_entries() - mesh.total_area()).abs() < 1e-12 * mesh.total_area());
        let ball = Ball::new([2.5, 0.0], 0.5, crate::fields::BumpProfile::Smooth);
        let coeff = CoefficientField { base: [1.5, 0.2, 1.0], bump: Some((ball, 2.0)) };
        let k = assemble_stiffness(&mesh, &coeff);
        assert!(k.is_symmetric());
        let ones = vec![1.0; mesh.num_vertices()];
        assert!(k.mul_vec(&ones).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn stiffness_is_linear_in_coefficient() {
        let mesh = well_mesh();
        let k1 = assemble_stiffness(&mesh, &CoefficientField::identity());
        let k2 = assemble_stiffness(&mesh, &CoefficientField::scaled_identity(2.0));
        assert_eq!(k1.scaled(2.0), k2);
    }

    #[test]
    fn potential_matrix_properties() {
        let mesh = well_mesh();
        assert_eq!(assemble_potential(&mesh, &PotentialSpec::Zero).nnz(), 0);
        let m = assemble_mass(&mesh);
        let c = assemble_potential(&mesh, &PotentialSpec::Constant(-3.0));
        for (i, j, v) in c.iter() {
            assert!((v + 3.0 * m.get(i, j)).abs() <= 1e-15 * v.abs());
        }
        let w = assemble_potential(&mesh, &PotentialSpec::radial_well(8.0, 1.0, 2.0));
        assert!(w.is_symmetric());
        let outside: Vec<usize> =
            (0..mesh.num_vertices()).filter(|&v| crate::geometry::norm_point(mesh.vertices[v]) > 2.0 + 1e-9).collect();
        for &v in &outside {
            assert!(w.row(v).1.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn boundary_mass_total_is_alpha_times_omega_length() {
        let mesh = well_mesh();
        let alpha = 2.5;
        let b = assemble_robin_boundary(&mesh, alpha);
        let len: f64 = mesh
            .edges_with_tag(EdgeTag::Omega)
            .map(|e| crate::geometry::dist_points(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]))
            .sum();
        assert!((b.sum_entries() - alpha * len).abs() < 1e-12);
    }

    #[test]
    fn dof_counts_for_each_mode() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 4.0)).unwrap();
        let neumann = tag_boundary(&mesh, &BoundarySpec::neumann()).unwrap();
        let robin = DofMap::new(&neumann, ConstraintMode::RobinMixed).unwrap();
        assert_eq!(robin.n_free(), 144 - 16);
        let half = tag_boundary(&mesh, &BoundarySpec::mixed(vec![(0.0, PI)], 1.0)).unwrap();
        let mixed = DofMap::new(&half, ConstraintMode::RobinMixed).unwrap();
        let dirichlet = DofMap::new(&half, ConstraintMode::Dirichlet).unwrap();
        // ω = 8 edges spanning 9 vertices, 7 of them strictly inside ω
        assert_eq!(mixed.n_free(), 144 - 16 - 16 + 7);
        assert_eq!(dirichlet.n_free(), mixed.n_free() - 7);
        assert!(dirichlet.free.iter().all(|v| mixed.free.contains(v)));
        let pure = tag_boundary(&mesh, &BoundarySpec::dirichlet()).unwrap();
        assert!(DofMap::new(&pure, ConstraintMode::RobinMixed).is_err());
    }

    #[test]
    fn trace_zero_vectors_see_identical_forms() {
        let mesh = well_mesh();
        let field = OperatorField::schrodinger(PotentialSpec::radial_well(8.0, 1.0, 2.0));
        let d = assemble_dirichlet(&mesh, &field).unwrap();
        let r = assemble_mixed(&mesh, &field, 1.0).unwrap();
        let pos = r.dof.free_index();
        let sub: Vec<usize> = d.dof.free.iter().map(|&v| pos[v].unwrap()).collect();
        assert_eq!(r.a.restrict(&sub), d.a);
        assert_eq!(r.m.restrict(&sub), d.m);
    }

    #[test]
    fn neumann_paths_agree_bitwise() {
        let mesh = tag_boundary(&well_mesh(), &BoundarySpec::neumann()).unwrap();
        let field = OperatorField::schrodinger(PotentialSpec::radial_well(8.0, 1.0, 2.0));
        let via_robin = assemble_mixed(&mesh, &field, 0.0).unwrap();
        let direct = assemble_neumann(&mesh, &field).unwrap();
        assert_eq!(via_robin.a, direct.a);
        assert_eq!(via_robin.m, direct.m);
        assert_eq!(via_robin.dof, direct.dof);
    }
}
