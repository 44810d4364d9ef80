//! Certificates comparing a "weak" operator (larger form domain or smaller
//! form) with a "strong" one on a sequence of meshes.
//!
//! Three kinds of evidence are collected. Exact single-mesh invariants are
//! the ordering `λ_k^weak ≤ λ_k^strong` and the counting inequality
//! `N_weak((−∞, μ)) ≥ N_strong((−∞, μ])`. Strictness verdicts come from
//! Richardson-extrapolated gaps. Trace norms of the weak eigenvectors on the
//! obstacle boundary are recorded as well.

use std::fmt::Write as _;

use crate::assembly::{
    assemble_dirichlet, assemble_mixed, assemble_neumann, assemble_obstacle_boundary_mass, AssembledSystem, DofMap,
};
use crate::error::{Error, Result};
use crate::fields::{OperatorField, OrderingWitness};
use crate::geometry::{build_mesh, tag_boundary, BoundarySpec, DomainSpec, Mesh};
use crate::richardson::{richardson_extrapolate, Extrapolation, Status};
use crate::sparse::CsrMatrix;
use crate::spectral::{cluster_values, eigs_below_pencil, Pencil, SolverOptions, SpectralResult, CLUSTER_TOL};

/// Slack of the single-mesh ordering check.
pub const ORDERING_SLACK: f64 = 1e-10;
/// Smallest admissible normalized trace norm of a weak eigenvector.
pub const TRACE_FLOOR: f64 = 1e-6;
/// A strict gap must exceed this multiple of the discretization error.
pub const STRICT_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonKind {
    DirichletVsMixed,
    DirichletVsNeumann,
    CoefficientPair,
}

impl ComparisonKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonKind::DirichletVsMixed => "dirichlet_vs_mixed",
            ComparisonKind::DirichletVsNeumann => "dirichlet_vs_neumann",
            ComparisonKind::CoefficientPair => "coefficient_pair",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet_vs_mixed" => Some(ComparisonKind::DirichletVsMixed),
            "dirichlet_vs_neumann" => Some(ComparisonKind::DirichletVsNeumann),
            "coefficient_pair" => Some(ComparisonKind::CoefficientPair),
            _ => None,
        }
    }
}

/// Which indices must carry a strict-gap certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum StrictSelection {
    None,
    /// 1-based indices.
    Indices(Vec<usize>),
    /// Every index resolved on all meshes with `λ_k^strong` below the cutoff on the finest one.
    Below(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    /// Eigenpairs strictly below this value are computed for both operators.
    pub threshold: f64,
    /// Counting probes; empty means the strong eigenvalues of each mesh.
    pub probes: Vec<f64>,
    pub strict: StrictSelection,
    pub solver: SolverOptions,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            threshold: 0.0,
            probes: vec![],
            strict: StrictSelection::Indices(vec![1]),
            solver: SolverOptions::default(),
        }
    }
}

/// A tagged mesh of a refinement sequence with its nominal size.
#[derive(Debug, Clone)]
pub struct MeshLevel {
    pub level: u32,
    /// Level-0 mesh size divided by `2^level`.
    pub h: f64,
    pub mesh: Mesh,
}

/// Builds and tags the meshes of `spec` at the requested levels (ascending).
pub fn mesh_sequence(spec: &DomainSpec, bc: &BoundarySpec, levels: &[u32]) -> Result<Vec<MeshLevel>> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config { line: 0, message: "mesh levels must be nonempty and strictly increasing".into() });
    }
    let h0 = build_mesh(&spec.clone().with_level(0))?.mesh_size();
    levels
        .iter()
        .map(|&level| {
            let mesh = tag_boundary(&build_mesh(&spec.clone().with_level(level))?, bc)?;
            Ok(MeshLevel { level, h: h0 / f64::powi(2.0, level as i32), mesh })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    /// 1-based.
    pub k: usize,
    pub weak: f64,
    pub strong: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingCheck {
    pub mu: f64,
    pub weak_open: usize,
    pub strong_open: usize,
    pub strong_at_mu: usize,
    pub strong_closed: usize,
}

impl CountingCheck {
    pub fn holds(&self) -> bool {
        self.weak_open >= self.strong_closed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshComparison {
    pub level: u32,
    pub h: f64,
    pub n_free_weak: usize,
    pub n_free_strong: usize,
    pub weak: Vec<f64>,
    pub strong: Vec<f64>,
    pub gaps: Vec<GapRow>,
    pub counting: Vec<CountingCheck>,
    /// Obstacle-boundary trace norm of each normalized weak eigenvector;
    /// empty when the weak operator is itself Dirichlet.
    pub trace_norms: Vec<f64>,
    pub max_residual: f64,
}

impl MeshComparison {
    pub fn ordering_holds(&self) -> bool {
        self.weak.len() >= self.strong.len() && self.gaps.iter().all(|g| g.weak <= g.strong + ORDERING_SLACK)
    }

    pub fn counting_holds(&self) -> bool {
        self.counting.iter().all(CountingCheck::holds)
    }

    pub fn trace_holds(&self) -> bool {
        self.trace_norms.iter().all(|&t| t > TRACE_FLOOR)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds,
    Vacuous,
    Fails(String),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_acceptable(&self) -> bool {
        matches!(self, Verdict::Holds | Verdict::Vacuous)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Vacuous => "vacuous",
            Verdict::Fails(_) => "fails",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Verdict::Fails(s) | Verdict::Inconclusive(s) => s,
            _ => "",
        }
    }
}

/// Extrapolated gap of one index across the mesh sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRecord {
    pub k: usize,
    /// `(h, gap)` per mesh, coarse to fine.
    pub gaps: Vec<(f64, f64)>,
    pub gap: Option<Extrapolation>,
    pub weak: Option<Extrapolation>,
    pub strong: Option<Extrapolation>,
    pub verdict: Verdict,
}

/// Gaps of the finest configuration at the original and an enlarged truncation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub radius: f64,
    pub enlarged_radius: f64,
    /// `(k, gap at R, gap at the enlarged radius)`.
    pub rows: Vec<(usize, f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub summary: String,
    pub kind: ComparisonKind,
    pub meshes: Vec<MeshComparison>,
    pub refinement: Vec<RefinementRecord>,
    pub truncation: Option<TruncationReport>,
}

impl GapCertificate {
    /// True when the strong operator has no eigenvalue below the threshold on any mesh.
    pub fn nothing_to_compare(&self) -> bool {
        self.meshes.iter().all(|m| m.strong.is_empty())
    }

    pub fn ordering_verdict(&self) -> Verdict {
        match self.meshes.iter().find(|m| !m.ordering_holds()) {
            Some(m) => Verdict::Fails(format!("ordering violated on level {}", m.level)),
            None if self.nothing_to_compare() => Verdict::Vacuous,
            None => Verdict::Holds,
        }
    }

    pub fn counting_verdict(&self) -> Verdict {
        for m in &self.meshes {
            if let Some(c) = m.counting.iter().find(|c| !c.holds()) {
                return Verdict::Fails(format!(
                    "level {}: N_weak(<{:e}) = {} < N_strong(<={:e}) = {}",
                    m.level, c.mu, c.weak_open, c.mu, c.strong_closed
                ));
            }
        }
        if self.meshes.iter().all(|m| m.counting.is_empty()) {
            Verdict::Vacuous
        } else {
            Verdict::Holds
        }
    }

    pub fn trace_verdict(&self) -> Verdict {
        for m in &self.meshes {
            if let Some(t) = m.trace_norms.iter().find(|&&t| t <= TRACE_FLOOR) {
                return Verdict::Fails(format!("level {}: trace norm {:e}", m.level, t));
            }
        }
        if self.meshes.iter().all(|m| m.trace_norms.is_empty()) {
            Verdict::Vacuous
        } else {
            Verdict::Holds
        }
    }

    pub fn strict_verdict(&self) -> Verdict {
        if let Some(r) = self.refinement.iter().find(|r| !r.verdict.is_acceptable()) {
            return match &r.verdict {
                Verdict::Fails(s) => Verdict::Fails(format!("k = {}: {s}", r.k)),
                Verdict::Inconclusive(s) => Verdict::Inconclusive(format!("k = {}: {s}", r.k)),
                _ => unreachable!(),
            };
        }
        if self.refinement.is_empty() {
            Verdict::Vacuous
        } else {
            Verdict::Holds
        }
    }

    /// Exact invariants first, then the numerical verdicts.
    pub fn verdicts(&self) -> Vec<(&'static str, Verdict)> {
        vec![
            ("ordering", self.ordering_verdict()),
            ("counting", self.counting_verdict()),
            ("trace", self.trace_verdict()),
            ("strict", self.strict_verdict()),
        ]
    }

    pub fn all_acceptable(&self) -> bool {
        self.verdicts().iter().all(|(_, v)| v.is_acceptable())
    }

    pub fn gaps_csv(&self) -> String {
        let mut s = String::from("level,h,k,lambda_weak,lambda_strong,gap\n");
        for m in &self.meshes {
            for g in &m.gaps {
                let _ =
                    writeln!(s, "{},{:.16e},{},{:.16e},{:.16e},{:.16e}", m.level, m.h, g.k, g.weak, g.strong, g.gap);
            }
        }
        s
    }

    pub fn counting_csv(&self) -> String {
        let mut s = String::from("level,h,mu,n_weak_open,n_strong_open,n_strong_at_mu,n_strong_closed,holds\n");
        for m in &self.meshes {
            for c in &m.counting {
                let _ = writeln!(
                    s,
                    "{},{:.16e},{:.16e},{},{},{},{},{}",
                    m.level,
                    m.h,
                    c.mu,
                    c.weak_open,
                    c.strong_open,
                    c.strong_at_mu,
                    c.strong_closed,
                    c.holds()
                );
            }
        }
        s
    }

    pub fn trace_csv(&self) -> String {
        let mut s = String::from("level,k,lambda_weak,trace_norm\n");
        for m in &self.meshes {
            for (i, t) in m.trace_norms.iter().enumerate() {
                let _ = writeln!(s, "{},{},{:.16e},{:.16e}", m.level, i + 1, m.weak[i], t);
            }
        }
        s
    }

    pub fn refinement_csv(&self) -> String {
        let mut s =
            String::from("k,finest_gap,gap_limit,error_estimate,order,weak_limit,strong_limit,status,verdict\n");
        let num = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.16e}"));
        for r in &self.refinement {
            let status = r.gap.as_ref().map_or("none", |e| status_label(&e.status));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.k,
                num(r.gaps.last().map(|g| g.1)),
                num(r.gap.as_ref().map(|e| e.limit)),
                num(r.gap.as_ref().map(|e| e.error_estimate)),
                num(r.gap.as_ref().and_then(|e| e.order)),
                num(r.weak.as_ref().map(|e| e.limit)),
                num(r.strong.as_ref().map(|e| e.limit)),
                status,
                r.verdict.label()
            );
        }
        s
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "certificate: {}", self.kind.as_str());
        let _ = writeln!(s, "{}", self.summary);
        if self.nothing_to_compare() {
            let _ = writeln!(s, "status: nothing to compare (strong operator has no eigenvalues below the threshold)");
        }
        let _ = writeln!(s, "\n[exact discrete invariants]");
        for (name, v) in self.verdicts().into_iter().take(3) {
            let _ = writeln!(s, "{name:<10} {} {}", v.label(), v.detail());
        }
        for m in &self.meshes {
            let _ = writeln!(
                s,
                "level {} h={:.6e} free(weak)={} free(strong)={} eigenvalues weak={} strong={} max residual={:.3e}",
                m.level,
                m.h,
                m.n_free_weak,
                m.n_free_strong,
                m.weak.len(),
                m.strong.len(),
                m.max_residual
            );
            for g in &m.gaps {
                let _ = writeln!(s, "  k={:<3} weak={:.16e} strong={:.16e} gap={:.16e}", g.k, g.weak, g.strong, g.gap);
            }
            for c in &m.counting {
                let _ = writeln!(
                    s,
                    "  mu={:.16e} N_weak(<mu)={} N_strong(<=mu)={} {}",
                    c.mu,
                    c.weak_open,
                    c.strong_closed,
                    if c.holds() { "ok" } else { "VIOLATED" }
                );
            }
            if let Some(t) = m.trace_norms.iter().copied().reduce(f64::min) {
                let _ = writeln!(s, "  smallest trace norm {t:.6e}");
            }
        }
        let _ = writeln!(s, "\n[strictness verdicts]");
        let strict = self.strict_verdict();
        let _ = writeln!(s, "strict     {} {}", strict.label(), strict.detail());
        for r in &self.refinement {
            match &r.gap {
                Some(e) => {
                    let _ = writeln!(
                        s,
                        "  k={:<3} gap limit={:.16e} error={:.3e} order={} status={} verdict={}",
                        r.k,
                        e.limit,
                        e.error_estimate,
                        e.order.map_or("undefined".into(), |p| format!("{p:.4}")),
                        status_label(&e.status),
                        r.verdict.label()
                    );
                }
                None => {
                    let _ = writeln!(s, "  k={:<3} verdict={} {}", r.k, r.verdict.label(), r.verdict.detail());
                }
            }
        }
        if let Some(t) = &self.truncation {
            let _ = writeln!(s, "\n[truncation sensitivity, not gating]");
            for (k, g, g2) in &t.rows {
                let _ = writeln!(
                    s,
                    "  k={k:<3} gap(R={})={:.16e} gap(R={})={}",
                    t.radius,
                    g,
                    t.enlarged_radius,
                    g2.map_or("missing".into(), |v| format!("{v:.16e}"))
                );
            }
        }
        s
    }
}

fn status_label(s: &Status) -> &'static str {
    match s {
        Status::Extrapolated => "extrapolated",
        Status::Constant => "constant",
        Status::Inconclusive(_) => "inconclusive",
    }
}

/// Obstacle-boundary mass matrix for trace norms.
pub struct TraceOperator {
    b: CsrMatrix,
}

impl TraceOperator {
    pub fn new(mesh: &Mesh) -> Self {
        TraceOperator { b: assemble_obstacle_boundary_mass(mesh) }
    }

    /// `(uᵀ B u)^{1/2}` for a free-DOF vector `u`.
    pub fn norm(&self, dof: &DofMap, u: &[f64]) -> f64 {
        self.b.quad_form(&dof.expand(u)).max(0.0).sqrt()
    }
}

/// Discrete `L²(∂Ω)` norm of the trace of a free-DOF vector.
pub fn trace_norm(mesh: &Mesh, dof: &DofMap, u: &[f64]) -> f64 {
    TraceOperator::new(mesh).norm(dof, u)
}

struct Solved<'a> {
    system: &'a AssembledSystem,
    pencil: Pencil<'a>,
    result: SpectralResult,
}

impl<'a> Solved<'a> {
    fn new(system: &'a AssembledSystem, threshold: f64, options: &SolverOptions) -> Result<Self> {
        let pencil = Pencil::new(&system.a, &system.m)?;
        let result = eigs_below_pencil(&pencil, threshold, options)?;
        Ok(Solved { system, pencil, result })
    }
}

fn compare_on_mesh(
    level: &MeshLevel,
    weak: &AssembledSystem,
    strong: &AssembledSystem,
    trace: bool,
    options: &CompareOptions,
) -> Result<MeshComparison> {
    let w = Solved::new(weak, options.threshold, &options.solver)?;
    let s = Solved::new(strong, options.threshold, &options.solver)?;
    let gaps = s
        .result
        .eigenvalues
        .iter()
        .zip(&w.result.eigenvalues)
        .enumerate()
        .map(|(i, (&st, &wk))| GapRow { k: i + 1, weak: wk, strong: st, gap: st - wk })
        .collect();

    let probes: Vec<f64> = if options.probes.is_empty() {
        cluster_values(&s.result.eigenvalues, CLUSTER_TOL).into_iter().map(|c| c.0).collect()
    } else {
        options.probes.clone()
    };
    let mut counting = Vec::with_capacity(probes.len());
    for mu in probes {
        let report = s.pencil.counting_report(mu)?;
        counting.push(CountingCheck {
            mu,
            weak_open: w.pencil.count_below(mu)?,
            strong_open: report.n_strictly_below,
            strong_at_mu: report.n_at_mu,
            strong_closed: report.n_below_or_equal,
        });
    }

    let trace_norms = if trace {
        let op = TraceOperator::new(&level.mesh);
        w.result.eigenvectors.iter().map(|u| op.norm(&w.system.dof, u)).collect()
    } else {
        vec![]
    };
    Ok(MeshComparison {
        level: level.level,
        h: level.h,
        n_free_weak: weak.a.dim(),
        n_free_strong: strong.a.dim(),
        weak: w.result.eigenvalues.clone(),
        strong: s.result.eigenvalues.clone(),
        gaps,
        counting,
        trace_norms,
        max_residual: w.result.max_residual().max(s.result.max_residual()),
    })
}

fn strict_indices(meshes: &[MeshComparison], selection: &StrictSelection) -> Vec<usize> {
    let resolved = meshes.iter().map(|m| m.gaps.len()).min().unwrap_or(0);
    match selection {
        StrictSelection::None => vec![],
        StrictSelection::Indices(ks) => ks.clone(),
        StrictSelection::Below(cutoff) => {
            let finest = meshes.last().map(|m| m.strong.as_slice()).unwrap_or(&[]);
            (1..=resolved).filter(|&k| finest[k - 1] < *cutoff).collect()
        }
    }
}

fn extrapolate_series(meshes: &[MeshComparison], f: impl Fn(&GapRow) -> f64, k: usize) -> Option<Extrapolation> {
    let data: Vec<(f64, f64)> = meshes.iter().map(|m| (m.h, f(&m.gaps[k - 1]))).collect();
    richardson_extrapolate(&data).ok()
}

fn refinement_records(meshes: &[MeshComparison], selection: &StrictSelection) -> Vec<RefinementRecord> {
    let mut out = Vec::new();
    for k in strict_indices(meshes, selection) {
        if k == 0 || meshes.iter().any(|m| m.gaps.len() < k) {
            out.push(RefinementRecord {
                k,
                gaps: vec![],
                gap: None,
                weak: None,
                strong: None,
                verdict: Verdict::Inconclusive("index not resolved on every mesh".into()),
            });
            continue;
        }
        let gaps: Vec<(f64, f64)> = meshes.iter().map(|m| (m.h, m.gaps[k - 1].gap)).collect();
        let gap = extrapolate_series(meshes, |g| g.gap, k);
        let verdict = match &gap {
            None => Verdict::Inconclusive("fewer than 3 meshes".into()),
            Some(e) => strict_verdict(e, gaps.last().unwrap().1),
        };
        out.push(RefinementRecord {
            k,
            gap,
            weak: extrapolate_series(meshes, |g| g.weak, k),
            strong: extrapolate_series(meshes, |g| g.strong, k),
            gaps,
            verdict,
        });
    }
    out
}

fn strict_verdict(e: &Extrapolation, finest: f64) -> Verdict {
    match &e.status {
        Status::Inconclusive(why) => Verdict::Inconclusive(why.clone()),
        _ => {
            let bound = STRICT_MARGIN * e.error_estimate;
            if e.limit > bound && finest > bound {
                Verdict::Holds
            } else if e.limit <= 0.0 && finest <= 0.0 {
                Verdict::Fails(format!("gap limit {:e} is not positive", e.limit))
            } else {
                Verdict::Inconclusive(format!(
                    "gap {:e} within {STRICT_MARGIN} x error {:e}",
                    e.limit, e.error_estimate
                ))
            }
        }
    }
}

fn finish(
    summary: String,
    kind: ComparisonKind,
    meshes: Vec<MeshComparison>,
    options: &CompareOptions,
) -> GapCertificate {
    let refinement =
        if meshes.iter().all(|m| m.strong.is_empty()) { vec![] } else { refinement_records(&meshes, &options.strict) };
    GapCertificate { summary, kind, meshes, refinement, truncation: None }
}

fn check_sequence(meshes: &[MeshLevel]) -> Result<()> {
    if meshes.is_empty() {
        return Err(Error::Config { line: 0, message: "empty mesh sequence".into() });
    }
    Ok(())
}

/// Dirichlet against Robin/mixed (or Neumann when `ω = ∂Ω`, `α = 0`) on
/// each mesh of the sequence. The meshes must already be tagged with `bc`.
pub fn compare_dirichlet_vs_mixed(
    meshes: &[MeshLevel],
    field: &OperatorField,
    bc: &BoundarySpec,
    options: &CompareOptions,
) -> Result<GapCertificate> {
    check_sequence(meshes)?;
    bc.validate()?;
    if bc.omega.is_empty() {
        return Err(Error::InvalidBoundary("the Robin part omega is empty".into()));
    }
    if let Some(mu) = options.probes.iter().find(|&&mu| !(mu < 0.0)) {
        return Err(Error::Config { line: 0, message: format!("probe {mu} is not below 0") });
    }
    let neumann = bc.is_neumann();
    let kind = if neumann { ComparisonKind::DirichletVsNeumann } else { ComparisonKind::DirichletVsMixed };
    let mut out = Vec::with_capacity(meshes.len());
    for level in meshes {
        let strong = assemble_dirichlet(&level.mesh, field)?;
        let weak = if neumann {
            assemble_neumann(&level.mesh, field)?
        } else {
            assemble_mixed(&level.mesh, field, bc.robin_alpha)?
        };
        out.push(compare_on_mesh(level, &weak, &strong, true, options)?);
    }
    let summary = format!(
        "weak: {} (alpha = {}), strong: Dirichlet; threshold {:e}; levels {:?}",
        if neumann { "Neumann" } else { "Robin/mixed" },
        bc.robin_alpha,
        options.threshold,
        meshes.iter().map(|m| m.level).collect::<Vec<_>>()
    );
    Ok(finish(summary, kind, out, options))
}

/// Dirichlet operators `A₁` (weak) and `A₂` (strong) on shared meshes.
pub fn compare_coefficient_pairs(
    meshes: &[MeshLevel],
    f1: &OperatorField,
    f2: &OperatorField,
    witness: &OrderingWitness,
    options: &CompareOptions,
) -> Result<GapCertificate> {
    if !witness.is_ordered() {
        return Err(Error::InvalidField(format!(
            "fields are not ordered (psd: {}, scalar: {})",
            witness.pointwise_psd, witness.pointwise_scalar
        )));
    }
    let ball = witness.strict_ball.ok_or_else(|| Error::InvalidField("no strict ball declared".into()))?;
    check_sequence(meshes)?;
    let mut out = Vec::with_capacity(meshes.len());
    for level in meshes {
        let weak = assemble_dirichlet(&level.mesh, f1)?;
        let strong = assemble_dirichlet(&level.mesh, f2)?;
        out.push(compare_on_mesh(level, &weak, &strong, false, options)?);
    }
    let summary = format!(
        "weak: A1, strong: A2 (Dirichlet); strict ball center ({}, {}) radius {} via {:?} condition; threshold {:e}; levels {:?}",
        ball.center[0],
        ball.center[1],
        ball.radius,
        ball.condition,
        options.threshold,
        meshes.iter().map(|m| m.level).collect::<Vec<_>>()
    );
    Ok(finish(summary, ComparisonKind::CoefficientPair, out, options))
}

/// Re-runs the finest mesh configuration at `factor·R` and tabulates the
/// gaps of both radii side by side.
pub fn truncation_sensitivity(
    certificate: &mut GapCertificate,
    spec: &DomainSpec,
    bc: &BoundarySpec,
    fields: (&OperatorField, &OperatorField),
    factor: f64,
    options: &CompareOptions,
) -> Result<()> {
    let Some(finest) = certificate.meshes.last() else { return Ok(()) };
    let enlarged = DomainSpec { trunc_radius: spec.trunc_radius * factor, ..spec.clone() };
    let level = mesh_sequence(&enlarged, bc, &[finest.level])?;
    let opts = CompareOptions { strict: StrictSelection::None, ..options.clone() };
    let other = match certificate.kind {
        ComparisonKind::CoefficientPair => {
            let (f1, f2) = fields;
            let weak = assemble_dirichlet(&level[0].mesh, f1)?;
            let strong = assemble_dirichlet(&level[0].mesh, f2)?;
            compare_on_mesh(&level[0], &weak, &strong, false, &opts)?
        }
        _ => compare_dirichlet_vs_mixed(&level, fields.0, bc, &opts)?.meshes.remove(0),
    };
    let rows = finest.gaps.iter().map(|g| (g.k, g.gap, other.gaps.get(g.k - 1).map(|o| o.gap))).collect();
    certificate.truncation =
        Some(TruncationReport { radius: spec.trunc_radius, enlarged_radius: enlarged.trunc_radius, rows });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PotentialSpec;
    use crate::geometry::{BoundaryEdge, EdgeTag, Obstacle};

    fn row(k: usize, weak: f64, strong: f64) -> GapRow {
        GapRow { k, weak, strong, gap: strong - weak }
    }

    fn mesh_comparison(h: f64, weak: Vec<f64>, strong: Vec<f64>) -> MeshComparison {
        let gaps = strong.iter().zip(&weak).enumerate().map(|(i, (&s, &w))| row(i + 1, w, s)).collect();
        MeshComparison {
            level: 0,
            h,
            n_free_weak: 10,
            n_free_strong: 8,
            weak,
            strong,
            gaps,
            counting: vec![],
            trace_norms: vec![],
            max_residual: 0.0,
        }
    }

    #[test]
    fn ordering_check_uses_slack() {
        let ok = mesh_comparison(0.1, vec![-1.0 + 5e-11], vec![-1.0]);
        assert!(ok.ordering_holds());
        let bad = mesh_comparison(0.1, vec![-1.0 + 1e-9], vec![-1.0]);
        assert!(!bad.ordering_holds());
        let missing = mesh_comparison(0.1, vec![], vec![-1.0]);
        assert!(!missing.ordering_holds());
    }

    #[test]
    fn strict_verdicts_from_refinement() {
        let meshes: Vec<MeshComparison> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&h: &f64| mesh_comparison(h, vec![-2.0 - h * h], vec![-1.0 + 0.1 * h * h]))
            .collect();
        let recs = refinement_records(&meshes, &StrictSelection::Indices(vec![1]));
        assert_eq!(recs[0].verdict, Verdict::Holds);
        let g = recs[0].gap.as_ref().unwrap();
        assert!((g.limit - 1.0).abs() < 1e-9 && (g.order.unwrap() - 2.0).abs() < 1e-9);

        let tiny: Vec<MeshComparison> =
            [0.4, 0.2, 0.1].iter().map(|&h: &f64| mesh_comparison(h, vec![-1.0 - 1e-4 - h * h], vec![-1.0])).collect();
        let recs = refinement_records(&tiny, &StrictSelection::Indices(vec![1]));
        assert!(matches!(recs[0].verdict, Verdict::Inconclusive(_)));

        let unresolved = refinement_records(&meshes, &StrictSelection::Indices(vec![2]));
        assert!(matches!(unresolved[0].verdict, Verdict::Inconclusive(_)));
    }

    #[test]
    fn selection_below_cutoff() {
        let meshes = vec![
            mesh_comparison(0.2, vec![-3.0, -2.0], vec![-2.5, -1.0]),
            mesh_comparison(0.1, vec![-3.1, -2.1, -0.5], vec![-2.6, -1.1, -0.01]),
        ];
        assert_eq!(strict_indices(&meshes, &StrictSelection::Below(-0.05)), vec![1, 2]);
        assert_eq!(strict_indices(&meshes, &StrictSelection::Below(-2.0)), vec![1]);
        assert!(strict_indices(&meshes, &StrictSelection::None).is_empty());
    }

    fn square_patch() -> Mesh {
        // unit square split along the diagonal, bottom edge on the obstacle
        Mesh {
            vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            boundary_edges: vec![
                BoundaryEdge { vertices: [0, 1], tag: EdgeTag::Omega },
                BoundaryEdge { vertices: [1, 2], tag: EdgeTag::Truncation },
                BoundaryEdge { vertices: [2, 3], tag: EdgeTag::Truncation },
                BoundaryEdge { vertices: [3, 0], tag: EdgeTag::Omega },
            ],
            obstacle: Obstacle::Disk { radius: 0.5 },
            trunc_radius: 10.0,
        }
    }

    #[test]
    fn trace_norm_by_hand() {
        let mesh = square_patch();
        let dof = DofMap { n_vertices: 4, free: vec![0, 1, 3], constrained: vec![2] };
        // indicator of vertex 0: adjacent obstacle edges of lengths 2 and 1
        let t = trace_norm(&mesh, &dof, &[1.0, 0.0, 0.0]);
        assert!((t - ((2.0 * 2.0 + 2.0 * 1.0) / 6.0f64).sqrt()).abs() < 1e-15);
        let interior = DofMap { n_vertices: 4, free: vec![2], constrained: vec![0, 1, 3] };
        assert_eq!(trace_norm(&mesh, &interior, &[1.0]), 0.0);
    }

    #[test]
    fn rejects_unordered_witness() {
        let w = OrderingWitness { pointwise_psd: false, pointwise_scalar: true, strict_ball: None };
        let f = OperatorField::schrodinger(PotentialSpec::Zero);
        assert!(compare_coefficient_pairs(&[], &f, &f, &w, &CompareOptions::default()).is_err());
    }

    #[test]
    fn verdict_aggregation() {
        let cert = GapCertificate {
            summary: String::new(),
            kind: ComparisonKind::DirichletVsNeumann,
            meshes: vec![mesh_comparison(0.1, vec![], vec![])],
            refinement: vec![],
            truncation: None,
        };
        assert!(cert.nothing_to_compare());
        assert!(cert.verdicts().iter().all(|(_, v)| *v == Verdict::Vacuous));
        assert!(cert.all_acceptable());
    }
}
