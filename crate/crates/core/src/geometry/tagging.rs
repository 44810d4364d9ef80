use std::f64::consts::PI;

use super::{angle, EdgeTag, Mesh};
use crate::error::{Error, Result};

/// Boundary condition description for the obstacle boundary.
///
/// `omega` lists half-open angular intervals `[a, b)` selecting the Robin
/// part ω; the rest of the obstacle boundary is Dirichlet. The truncation
/// circle is always Dirichlet.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub omega: Vec<(f64, f64)>,
    pub robin_alpha: f64,
}

impl BoundarySpec {
    /// Pure Dirichlet obstacle (ω empty).
    pub fn dirichlet() -> Self {
        BoundarySpec { omega: Vec::new(), robin_alpha: 0.0 }
    }

    /// ω = whole obstacle boundary, α = 0.
    pub fn neumann() -> Self {
        BoundarySpec { omega: vec![(0.0, 2.0 * PI)], robin_alpha: 0.0 }
    }

    pub fn mixed(omega: Vec<(f64, f64)>, robin_alpha: f64) -> Self {
        BoundarySpec { omega, robin_alpha }
    }

    pub fn is_full_circle(&self) -> bool {
        let covered: f64 = self.omega.iter().map(|(a, b)| b - a).sum();
        (covered - 2.0 * PI).abs() < 1e-12
    }

    pub fn is_neumann(&self) -> bool {
        self.is_full_circle() && self.robin_alpha == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.robin_alpha.is_finite() {
            return Err(Error::InvalidBoundary(format!("robin alpha {} is not finite", self.robin_alpha)));
        }
        let mut sorted = self.omega.clone();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(a, b) in &sorted {
            if !(0.0 <= a && a < b && b <= 2.0 * PI + 1e-12) {
                return Err(Error::InvalidBoundary(format!("interval [{a}, {b}) is not inside [0, 2π)")));
            }
        }
        if sorted.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::InvalidBoundary("omega intervals overlap".into()));
        }
        Ok(())
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        self.omega.iter().any(|&(a, b)| a <= theta && theta < b)
    }
}

/// Tags obstacle edges by the polar angle of their midpoint.
///
/// A nonempty selector list that matches no edge is rejected, since a
/// Robin/mixed problem needs ω ≠ ∅. An empty list yields the pure Dirichlet tagging.
pub fn tag_boundary(mesh: &Mesh, bc: &BoundarySpec) -> Result<Mesh> {
    bc.validate()?;
    let mut out = mesh.clone();
    let mut matched = 0;
    for e in out.boundary_edges.iter_mut().filter(|e| e.tag.is_obstacle()) {
        let (p, q) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        let theta = angle([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        e.tag = if bc.contains_angle(theta) {
            matched += 1;
            EdgeTag::Omega
        } else {
            EdgeTag::OmegaPrime
        };
    }
    if !bc.omega.is_empty() && matched == 0 {
        return Err(Error::InvalidBoundary("omega selector matches no obstacle edge".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};

    fn coarse() -> Mesh {
        build_mesh(&DomainSpec::disk(1.0, 4.0)).unwrap()
    }

    #[test]
    fn full_circle_selects_everything() {
        let m = tag_boundary(&coarse(), &BoundarySpec::neumann()).unwrap();
        assert_eq!(m.count_tag(EdgeTag::Omega), 16);
        assert_eq!(m.count_tag(EdgeTag::OmegaPrime), 0);
        assert_eq!(m.count_tag(EdgeTag::Truncation), 16);
    }

    #[test]
    fn empty_selector_is_pure_dirichlet() {
        let m = tag_boundary(&coarse(), &BoundarySpec::dirichlet()).unwrap();
        assert_eq!(m.count_tag(EdgeTag::Omega), 0);
        assert_eq!(m.count_tag(EdgeTag::OmegaPrime), 16);
    }

    #[test]
    fn half_circle_selects_eight_edges() {
        let m = tag_boundary(&coarse(), &BoundarySpec::mixed(vec![(0.0, PI)], 1.0)).unwrap();
        assert_eq!(m.count_tag(EdgeTag::Omega), 8);
        assert_eq!(m.count_tag(EdgeTag::OmegaPrime), 8);
    }

    #[test]
    fn selector_matching_nothing_is_rejected() {
        // a sliver between two midpoint angles
        let sliver = BoundarySpec::mixed(vec![(0.0, 0.01)], 1.0);
        assert!(matches!(tag_boundary(&coarse(), &sliver), Err(Error::InvalidBoundary(_))));
    }

    #[test]
    fn overlapping_intervals_are_rejected() {
        let bc = BoundarySpec::mixed(vec![(0.0, 2.0), (1.0, 3.0)], 0.0);
        assert!(bc.validate().is_err());
    }
}
