//! Potentials and coefficient matrices, with the pointwise ordering checks
//! used by the coefficient comparison.

use crate::error::{Error, Result};
use crate::geometry::{dist_points, norm_point, Mesh, Point};

/// Relative tolerance of the pointwise ordering checks.
pub const ORDERING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpProfile {
    /// Characteristic function of the open ball.
    Indicator,
    /// `(1 − |x − c|²/ρ²)²` inside the ball, zero outside; C¹ and positive in the open ball.
    Smooth,
}

/// Open ball with a unit-height bump profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    pub profile: BumpProfile,
}

impl Ball {
    pub fn new(center: Point, radius: f64, profile: BumpProfile) -> Self {
        Ball { center, radius, profile }
    }

    pub fn contains(&self, x: Point) -> bool {
        dist_points(x, self.center) < self.radius
    }

    /// Bump value in `[0, 1]`.
    pub fn bump(&self, x: Point) -> f64 {
        let s = dist_points(x, self.center) / self.radius;
        if s >= 1.0 {
            return 0.0;
        }
        match self.profile {
            BumpProfile::Indicator => 1.0,
            BumpProfile::Smooth => (1.0 - s * s).powi(2),
        }
    }
}

/// Real potential `V(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `−α |x|^{−2+ε}`, held constant for `|x| ≤ cap_radius`.
    RadialPower {
        alpha: f64,
        epsilon: f64,
        cap_radius: f64,
    },
    /// `−depth` on `inner < |x| < outer`, zero elsewhere.
    RadialWell {
        depth: f64,
        inner: f64,
        outer: f64,
    },
    BallBump {
        ball: Ball,
        height: f64,
    },
    Constant(f64),
    Sum(Vec<PotentialSpec>),
}

impl PotentialSpec {
    /// Slowly decaying power potential; `cutoff` is R₀ and the cap is taken
    /// at `max(cutoff, obstacle_radius)` so the potential stays bounded.
    pub fn radial_power(alpha: f64, epsilon: f64, cutoff: f64, obstacle_radius: f64) -> Self {
        PotentialSpec::RadialPower { alpha, epsilon, cap_radius: cutoff.max(obstacle_radius) }
    }

    pub fn radial_well(depth: f64, inner: f64, outer: f64) -> Self {
        PotentialSpec::RadialWell { depth, inner, outer }
    }

    pub fn plus(self, other: PotentialSpec) -> Self {
        match self {
            PotentialSpec::Sum(mut terms) => {
                terms.push(other);
                PotentialSpec::Sum(terms)
            }
            s => PotentialSpec::Sum(vec![s, other]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidField(m));
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant(c) if c.is_finite() => Ok(()),
            PotentialSpec::Constant(c) => bad(format!("constant potential {c} is not finite")),
            PotentialSpec::RadialPower { alpha, epsilon, cap_radius } => {
                if !(*alpha > 0.0 && *epsilon > 0.0 && *cap_radius > 0.0) {
                    return bad(format!(
                        "radial_power needs alpha > 0, epsilon > 0 and a positive cap radius (got {alpha}, {epsilon}, {cap_radius})"
                    ));
                }
                Ok(())
            }
            PotentialSpec::RadialWell { depth, inner, outer } => {
                if !(*depth > 0.0 && *inner >= 0.0 && outer > inner) {
                    return bad(format!(
                        "radial_well needs depth > 0 and 0 <= inner < outer (got {depth}, {inner}, {outer})"
                    ));
                }
                Ok(())
            }
            PotentialSpec::BallBump { ball, height } => {
                if !(ball.radius > 0.0 && height.is_finite()) {
                    return bad("ball_bump needs a positive radius and finite height".into());
                }
                Ok(())
            }
            PotentialSpec::Sum(terms) => terms.iter().try_for_each(|t| t.validate()),
        }
    }

    pub fn evaluate(&self, x: Point) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant(c) => *c,
            PotentialSpec::BallBump { ball, height } => height * ball.bump(x),
            PotentialSpec::Sum(terms) => terms.iter().map(|t| t.evaluate(x)).sum(),
            radial => radial.radial_value(norm_point(x)).expect("radial variant"),
        }
    }

    /// Value as a function of `r = |x|`, or `None` if the potential is not radial.
    pub fn radial_value(&self, r: f64) -> Option<f64> {
        match self {
            PotentialSpec::Zero => Some(0.0),
            PotentialSpec::Constant(c) => Some(*c),
            PotentialSpec::RadialPower { alpha, epsilon, cap_radius } => {
                Some(-alpha * r.max(*cap_radius).powf(-2.0 + epsilon))
            }
            PotentialSpec::RadialWell { depth, inner, outer } => {
                Some(if *inner < r && r < *outer { -depth } else { 0.0 })
            }
            PotentialSpec::BallBump { .. } => None,
            PotentialSpec::Sum(terms) => terms.iter().map(|t| t.radial_value(r)).sum(),
        }
    }

    pub fn is_radial(&self) -> bool {
        self.radial_value(1.0).is_some()
    }

    /// Radii where a radial potential jumps.
    pub fn radial_jumps(&self) -> Vec<f64> {
        let mut out = match self {
            PotentialSpec::RadialWell { inner, outer, .. } => vec![*inner, *outer],
            PotentialSpec::Sum(terms) => terms.iter().flat_map(|t| t.radial_jumps()).collect(),
            _ => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Fails if the potential is not finite at one of the points.
    pub fn check_bounded(&self, points: &[Point]) -> Result<f64> {
        let mut sup = 0.0f64;
        for &p in points {
            let v = self.evaluate(p);
            if !v.is_finite() {
                return Err(Error::InvalidField(format!("potential is not finite at ({}, {})", p[0], p[1])));
            }
            sup = sup.max(v.abs());
        }
        Ok(sup)
    }
}

/// Symmetric 2×2 coefficient field `a(x) = base + amplitude·bump(x)·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    /// `[a11, a12, a22]`.
    pub base: [f64; 3],
    pub bump: Option<(Ball, f64)>,
}

impl CoefficientField {
    pub fn identity() -> Self {
        CoefficientField { base: [1.0, 0.0, 1.0], bump: None }
    }

    pub fn scaled_identity(c: f64) -> Self {
        CoefficientField { base: [c, 0.0, c], bump: None }
    }

    pub fn with_bump(mut self, ball: Ball, amplitude: f64) -> Self {
        self.bump = Some((ball, amplitude));
        self
    }

    pub fn evaluate(&self, x: Point) -> [f64; 3] {
        let [a, b, c] = self.base;
        match &self.bump {
            Some((ball, amp)) => {
                let s = amp * ball.bump(x);
                [a + s, b, c + s]
            }
            None => [a, b, c],
        }
    }

    /// Lower bound E in `ξᵀ a(x) ξ ≥ E |ξ|²`.
    pub fn ellipticity_constant(&self) -> f64 {
        let [a, b, c] = self.base;
        let lambda_min = 0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt();
        lambda_min + self.bump.map_or(0.0, |(_, amp)| amp.min(0.0))
    }

    /// Checks ellipticity on the probe directions {e₁, e₂, (e₁ ± e₂)/√2}.
    pub fn check_ellipticity(&self, points: &[Point]) -> Result<f64> {
        let e = self.ellipticity_constant();
        if !(e > 0.0) {
            return Err(Error::InvalidField(format!("coefficient field is not uniformly elliptic (E = {e})")));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let probes = [[1.0, 0.0], [0.0, 1.0], [h, h], [h, -h]];
        for &p in points {
            let [a, b, c] = self.evaluate(p);
            for xi in probes {
                let q = a * xi[0] * xi[0] + 2.0 * b * xi[0] * xi[1] + c * xi[1] * xi[1];
                if q < e * (1.0 - 1e-12) {
                    return Err(Error::InvalidField(format!("ellipticity fails at ({}, {}): {q} < {e}", p[0], p[1])));
                }
            }
        }
        Ok(e)
    }
}

/// Principal part plus potential: `−∇·(a ∇u) + V u`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorField {
    pub coefficient: CoefficientField,
    pub potential: PotentialSpec,
}

impl OperatorField {
    pub fn schrodinger(potential: PotentialSpec) -> Self {
        OperatorField { coefficient: CoefficientField::identity(), potential }
    }

    pub fn new(coefficient: CoefficientField, potential: PotentialSpec) -> Self {
        OperatorField { coefficient, potential }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrictCondition {
    /// The scalar parts are strictly ordered in the ball.
    Scalar,
    /// The coefficient difference is invertible in the ball.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictBall {
    pub center: Point,
    pub radius: f64,
    pub condition: StrictCondition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingWitness {
    pub pointwise_psd: bool,
    pub pointwise_scalar: bool,
    pub strict_ball: Option<StrictBall>,
}

impl OrderingWitness {
    pub fn is_ordered(&self) -> bool {
        self.pointwise_psd && self.pointwise_scalar
    }
}

/// Checks `a₂ − a₁ ⪰ 0` and `V₁ ≤ V₂` at the triangle barycenters of `mesh`,
/// and validates the declared strict ball (center, radius) if any.
pub fn check_ordering(
    f1: &OperatorField,
    f2: &OperatorField,
    mesh: &Mesh,
    declared: Option<(Point, f64)>,
) -> Result<OrderingWitness> {
    let points: Vec<Point> = (0..mesh.num_triangles()).map(|t| mesh.barycenter(t)).collect();
    let witness = check_ordering_at(f1, f2, &points, declared)?;
    if let Some(ball) = witness.strict_ball {
        let inner = mesh.obstacle.outer_radius();
        let r = norm_point(ball.center);
        if !(r - ball.radius > inner && r + ball.radius < mesh.trunc_radius) {
            return Err(Error::StrictBallRejected {
                reason: "ball is not inside the truncated domain".into(),
                x: ball.center[0],
                y: ball.center[1],
            });
        }
    }
    Ok(witness)
}

/// Pointwise ordering checks on an explicit list of quadrature points.
pub fn check_ordering_at(
    f1: &OperatorField,
    f2: &OperatorField,
    points: &[Point],
    declared: Option<(Point, f64)>,
) -> Result<OrderingWitness> {
    let mut psd = true;
    let mut scalar = true;
    for &x in points {
        let (d, s) = matrix_difference(f1, f2, x);
        let tol = ORDERING_TOL * s;
        let (tr, det) = (d[0] + d[2], d[0] * d[2] - d[1] * d[1]);
        if tr < -tol || det < -tol * s {
            psd = false;
        }
        let (v1, v2) = (f1.potential.evaluate(x), f2.potential.evaluate(x));
        if v2 - v1 < -ORDERING_TOL * v1.abs().max(v2.abs()) {
            scalar = false;
        }
    }
    let strict_ball = match declared {
        None => None,
        Some((center, radius)) => Some(validate_ball(f1, f2, points, center, radius)?),
    };
    Ok(OrderingWitness { pointwise_psd: psd, pointwise_scalar: scalar, strict_ball })
}

fn matrix_difference(f1: &OperatorField, f2: &OperatorField, x: Point) -> ([f64; 3], f64) {
    let (a1, a2) = (f1.coefficient.evaluate(x), f2.coefficient.evaluate(x));
    let d = [a2[0] - a1[0], a2[1] - a1[1], a2[2] - a1[2]];
    let scale = a1.iter().chain(&a2).fold(0.0f64, |m, v| m.max(v.abs()));
    (d, scale)
}

fn validate_ball(
    f1: &OperatorField,
    f2: &OperatorField,
    points: &[Point],
    center: Point,
    radius: f64,
) -> Result<StrictBall> {
    let inside: Vec<Point> = points.iter().copied().filter(|&x| dist_points(x, center) < radius).collect();
    if inside.is_empty() {
        return Err(Error::StrictBallRejected {
            reason: "declared ball contains no quadrature point".into(),
            x: center[0],
            y: center[1],
        });
    }
    let scalar_fail = inside.iter().copied().find(|&x| {
        let (v1, v2) = (f1.potential.evaluate(x), f2.potential.evaluate(x));
        !(v2 - v1 > ORDERING_TOL * v1.abs().max(v2.abs()))
    });
    if scalar_fail.is_none() {
        return Ok(StrictBall { center, radius, condition: StrictCondition::Scalar });
    }
    let matrix_fail = inside.iter().copied().find(|&x| {
        let (d, s) = matrix_difference(f1, f2, x);
        let tol = ORDERING_TOL * s;
        let (tr, det) = (d[0] + d[2], d[0] * d[2] - d[1] * d[1]);
        !(tr > tol && det > tol * s)
    });
    match matrix_fail {
        None => Ok(StrictBall { center, radius, condition: StrictCondition::Matrix }),
        Some(p) => Err(Error::StrictBallRejected {
            reason: "neither the scalar nor the matrix difference is strict".into(),
            x: p[0],
            y: p[1],
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<Point> {
        let mut pts = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                pts.push([-4.0 + 0.2 * i as f64 + 0.01, -4.0 + 0.2 * j as f64 + 0.013]);
            }
        }
        pts
    }

    #[test]
    fn evaluates_presets() {
        assert_eq!(PotentialSpec::Zero.evaluate([3.0, -2.0]), 0.0);
        let p = PotentialSpec::radial_power(1.0, 0.5, 0.0, 1.0);
        assert!((p.evaluate([4.0, 0.0]) - (-0.125)).abs() < 1e-15);
        // capped inside the obstacle radius
        assert_eq!(p.evaluate([0.5, 0.0]), -1.0);
        let w = PotentialSpec::radial_well(8.0, 1.0, 2.0);
        assert_eq!(w.evaluate([1.5, 0.0]), -8.0);
        assert_eq!(w.evaluate([0.0, 3.0]), 0.0);
        assert_eq!(w.radial_jumps(), vec![1.0, 2.0]);
    }

    #[test]
    fn bump_profiles() {
        let b = Ball::new([1.5, 0.0], 0.3, BumpProfile::Indicator);
        assert_eq!(b.bump([1.6, 0.0]), 1.0);
        assert_eq!(b.bump([1.9, 0.0]), 0.0);
        let s = Ball::new([1.5, 0.0], 0.3, BumpProfile::Smooth);
        assert_eq!(s.bump([1.5, 0.0]), 1.0);
        assert!(s.bump([1.79, 0.0]) > 0.0);
        assert_eq!(s.bump([1.8, 0.0]), 0.0);
    }

    #[test]
    fn identical_fields_are_ordered_without_strict_ball() {
        let f = OperatorField::schrodinger(PotentialSpec::radial_well(8.0, 1.0, 2.0));
        let w = check_ordering_at(&f, &f, &grid(), None).unwrap();
        assert!(w.pointwise_psd && w.pointwise_scalar);
        assert!(w.strict_ball.is_none());
        let err = check_ordering_at(&f, &f, &grid(), Some(([1.5, 0.0], 0.3)));
        assert!(matches!(err, Err(Error::StrictBallRejected { .. })));
    }

    #[test]
    fn scalar_bump_gives_condition_a() {
        let well = PotentialSpec::radial_well(8.0, 1.0, 2.0);
        let ball = Ball::new([1.5, 0.0], 0.3, BumpProfile::Indicator);
        let f1 = OperatorField::schrodinger(well.clone());
        let f2 = OperatorField::schrodinger(well.plus(PotentialSpec::BallBump { ball, height: 1.0 }));
        let w = check_ordering_at(&f1, &f2, &grid(), Some(([1.5, 0.0], 0.3))).unwrap();
        assert!(w.is_ordered());
        assert_eq!(w.strict_ball.unwrap().condition, StrictCondition::Scalar);
        // reversed order is not ordered
        let r = check_ordering_at(&f2, &f1, &grid(), None).unwrap();
        assert!(!r.pointwise_scalar && r.pointwise_psd);
    }

    #[test]
    fn matrix_bump_gives_condition_b() {
        let ball = Ball::new([1.5, 0.0], 0.3, BumpProfile::Indicator);
        let f1 = OperatorField::schrodinger(PotentialSpec::Zero);
        let f2 = OperatorField::new(CoefficientField::identity().with_bump(ball, 1.0), PotentialSpec::Zero);
        let w = check_ordering_at(&f1, &f2, &grid(), Some(([1.5, 0.0], 0.3))).unwrap();
        assert!(w.is_ordered());
        assert_eq!(w.strict_ball.unwrap().condition, StrictCondition::Matrix);
    }

    #[test]
    fn ellipticity() {
        let c = CoefficientField { base: [2.0, 0.5, 1.0], bump: None };
        let e = c.check_ellipticity(&grid()).unwrap();
        assert!((e - (1.5 - 0.5f64.sqrt())).abs() < 1e-14);
        let bad = CoefficientField { base: [1.0, 2.0, 1.0], bump: None };
        assert!(bad.check_ellipticity(&grid()).is_err());
    }

    #[test]
    fn non_psd_difference_detected() {
        let f1 = OperatorField::new(CoefficientField { base: [1.0, 0.0, 1.0], bump: None }, PotentialSpec::Zero);
        let f2 = OperatorField::new(CoefficientField { base: [2.0, 0.0, 0.5], bump: None }, PotentialSpec::Zero);
        let w = check_ordering_at(&f1, &f2, &grid(), None).unwrap();
        assert!(!w.pointwise_psd && w.pointwise_scalar);
    }
}
