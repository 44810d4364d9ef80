//! Experiment configurations, shipped presets and the runner that turns a
//! configuration into certificates and report files.

mod config;
mod presets;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{parse_coefficient, parse_config, parse_omega, parse_potential};
pub use presets::{find_preset, Preset, PRESETS};

use crate::comparison::{
    compare_coefficient_pairs, compare_dirichlet_vs_mixed, mesh_sequence, truncation_sensitivity, CompareOptions,
    ComparisonKind, GapCertificate, Verdict,
};
use crate::error::{Error, Result};
use crate::fields::{check_ordering, OperatorField};
use crate::geometry::{BoundarySpec, DomainSpec, Obstacle, Point};
use crate::radial::{radial_eigs, InnerCondition, RadialProblem, RadialSpectrum};
use crate::richardson::{richardson_extrapolate, Extrapolation};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub description: String,
    pub kind: ComparisonKind,
    /// Domain at the first truncation radius.
    pub domain: DomainSpec,
    pub radii: Vec<f64>,
    pub bc: BoundarySpec,
    /// One field, or the pair `(A₁, A₂)` for coefficient comparisons.
    pub fields: Vec<OperatorField>,
    pub strict_ball: Option<(Point, f64)>,
    pub levels: Vec<u32>,
    pub compare: CompareOptions,
    pub truncation_factor: Option<f64>,
    /// Require the strong count below the first probe to grow with the radius.
    pub require_count_growth: bool,
    pub oracle_n_r: Vec<usize>,
    pub oracle_m_max: usize,
    pub output_dir: Option<PathBuf>,
}

fn config_error(message: String) -> Error {
    Error::Config { line: 0, message }
}

impl ExperimentConfig {
    /// Resolves a preset name, or reads the file at `arg`.
    pub fn load(arg: &str) -> Result<Self> {
        match find_preset(arg) {
            Some(p) => parse_config(p.config),
            None => {
                let text = std::fs::read_to_string(arg)
                    .map_err(|e| config_error(format!("`{arg}` is neither a preset nor a readable file: {e}")))?;
                parse_config(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wanted = if self.kind == ComparisonKind::CoefficientPair { 2 } else { 1 };
        if self.fields.len() != wanted {
            return Err(config_error(format!(
                "comparison `{}` needs {wanted} field(s), got {}",
                self.kind.as_str(),
                self.fields.len()
            )));
        }
        match self.kind {
            ComparisonKind::CoefficientPair if self.strict_ball.is_none() => {
                return Err(config_error("comparison `coefficient_pair` needs strict.ball".into()))
            }
            ComparisonKind::DirichletVsNeumann if !self.bc.is_neumann() => {
                return Err(config_error(
                    "comparison `dirichlet_vs_neumann` needs bc.omega = full and bc.alpha = 0".into(),
                ))
            }
            ComparisonKind::DirichletVsMixed if self.bc.omega.is_empty() => {
                return Err(config_error("comparison `dirichlet_vs_mixed` needs a nonempty bc.omega".into()))
            }
            _ => {}
        }
        if let Some(mu) = self.compare.probes.iter().find(|&&mu| !(mu < 0.0)) {
            return Err(config_error(format!("probes must be negative, got {mu}")));
        }
        if self.compare.threshold > 0.0 {
            return Err(config_error(format!("threshold must not be positive, got {}", self.compare.threshold)));
        }
        for f in &self.fields {
            f.potential.validate()?;
            if !(f.coefficient.ellipticity_constant() > 0.0) {
                return Err(Error::InvalidField("coefficient is not uniformly elliptic".into()));
            }
        }
        Ok(())
    }

    pub fn domain_at(&self, radius: f64) -> DomainSpec {
        DomainSpec { trunc_radius: radius, ..self.domain.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRun {
    pub radius: f64,
    pub certificate: GapCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub name: String,
    pub description: String,
    pub kind: ComparisonKind,
    pub levels: Vec<u32>,
    pub runs: Vec<RadiusRun>,
    /// `(radius, strong count below the first probe on the finest mesh)`.
    pub counts: Vec<(f64, usize)>,
    pub verdicts: Vec<(String, Verdict)>,
}

fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let all: Vec<Verdict> = verdicts.into_iter().collect();
    if let Some(v) = all.iter().find(|v| matches!(v, Verdict::Fails(_))) {
        return v.clone();
    }
    if let Some(v) = all.iter().find(|v| matches!(v, Verdict::Inconclusive(_))) {
        return v.clone();
    }
    if all.contains(&Verdict::Holds) {
        Verdict::Holds
    } else {
        Verdict::Vacuous
    }
}

/// Count-sequence verdict: nondecreasing in the radius and strictly larger at the end.
pub fn count_growth_verdict(counts: &[(f64, usize)]) -> Verdict {
    let nondecreasing = counts.windows(2).all(|w| w[1].1 >= w[0].1);
    match (counts.first(), counts.last()) {
        (Some(a), Some(b)) if nondecreasing && b.1 > a.1 => Verdict::Holds,
        _ => Verdict::Fails(format!("counts {:?} are not nondecreasing with overall growth", counts)),
    }
}

fn run_radius(config: &ExperimentConfig, radius: f64) -> Result<GapCertificate> {
    let domain = config.domain_at(radius);
    let stage = |what: &str| format!("R = {radius}: {what}");
    let meshes = mesh_sequence(&domain, &config.bc, &config.levels).map_err(|e| e.in_stage(stage("meshing")))?;
    let mut cert = match config.kind {
        ComparisonKind::CoefficientPair => {
            let (f1, f2) = (&config.fields[0], &config.fields[1]);
            let mut witness = None;
            for m in &meshes {
                let w = check_ordering(f1, f2, &m.mesh, config.strict_ball)
                    .map_err(|e| e.in_stage(stage(&format!("ordering witness, level {}", m.level))))?;
                if !w.is_ordered() {
                    return Err(Error::InvalidField(format!(
                        "fields are not pointwise ordered on level {} (psd: {}, scalar: {})",
                        m.level, w.pointwise_psd, w.pointwise_scalar
                    )));
                }
                witness = Some(w);
            }
            compare_coefficient_pairs(&meshes, f1, f2, &witness.unwrap(), &config.compare)
        }
        _ => compare_dirichlet_vs_mixed(&meshes, &config.fields[0], &config.bc, &config.compare),
    }
    .map_err(|e| e.in_stage(stage("comparison")))?;
    if let Some(factor) = config.truncation_factor {
        let second = config.fields.get(1).unwrap_or(&config.fields[0]);
        truncation_sensitivity(&mut cert, &domain, &config.bc, (&config.fields[0], second), factor, &config.compare)
            .map_err(|e| e.in_stage(stage("truncation sensitivity")))?;
    }
    Ok(cert)
}

/// Runs every truncation radius of the configuration.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut runs = Vec::with_capacity(config.radii.len());
    for &radius in &config.radii {
        runs.push(RadiusRun { radius, certificate: run_radius(config, radius)? });
    }
    let counts: Vec<(f64, usize)> = runs
        .iter()
        .map(|r| {
            let finest = r.certificate.meshes.last().unwrap();
            (r.radius, finest.counting.first().map_or(finest.strong.len(), |c| c.strong_open))
        })
        .collect();
    let names = ["ordering", "counting", "trace", "strict"];
    let mut verdicts: Vec<(String, Verdict)> = names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), combine(runs.iter().map(|r| r.certificate.verdicts().swap_remove(i).1))))
        .collect();
    if config.require_count_growth {
        verdicts.push(("count_growth".into(), count_growth_verdict(&counts)));
    }
    Ok(RunOutcome {
        name: config.name.clone(),
        description: config.description.clone(),
        kind: config.kind,
        levels: config.levels.clone(),
        runs,
        counts,
        verdicts,
    })
}

fn radius_column(radius: f64, csv: &str, with_header: bool) -> String {
    let mut out = String::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            if with_header {
                let _ = writeln!(out, "trunc_radius,{line}");
            }
        } else {
            let _ = writeln!(out, "{radius:.16e},{line}");
        }
    }
    out
}

impl RunOutcome {
    /// Exit status contract: every verdict holds or is vacuous.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| v.is_acceptable())
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    fn csv(&self, f: impl Fn(&GapCertificate) -> String) -> String {
        self.runs.iter().enumerate().map(|(i, r)| radius_column(r.radius, &f(&r.certificate), i == 0)).collect()
    }

    /// `(file name, contents)` of every artifact.
    pub fn artifacts(&self) -> Vec<(&'static str, String)> {
        let mut counts = String::from("trunc_radius,strong_count\n");
        for (r, c) in &self.counts {
            let _ = writeln!(counts, "{r:.16e},{c}");
        }
        vec![
            ("report.txt", self.report()),
            ("summary.txt", self.summary()),
            ("gaps.csv", self.csv(GapCertificate::gaps_csv)),
            ("counting.csv", self.csv(GapCertificate::counting_csv)),
            ("trace.csv", self.csv(GapCertificate::trace_csv)),
            ("refinement.csv", self.csv(GapCertificate::refinement_csv)),
            ("counts.csv", counts),
        ]
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in self.artifacts() {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }

    /// Machine-readable `key = value` summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "comparison = {}", self.kind.as_str());
        let _ = writeln!(s, "levels = {}", self.levels.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
        for (name, v) in &self.verdicts {
            let _ = writeln!(s, "verdict.{name} = {}", v.label());
        }
        for run in &self.runs {
            let tag = format!("{}", run.radius);
            for rec in &run.certificate.refinement {
                let key = format!("R{tag}.k{}", rec.k);
                let _ = writeln!(s, "{key}.verdict = {}", rec.verdict.label());
                if let Some(e) = &rec.gap {
                    let _ = writeln!(s, "{key}.gap_limit = {:.16e}", e.limit);
                    let _ = writeln!(s, "{key}.error_estimate = {:.16e}", e.error_estimate);
                    if let Some(p) = e.order {
                        let _ = writeln!(s, "{key}.order = {p:.16e}");
                    }
                }
                if let Some(e) = &rec.weak {
                    let _ = writeln!(s, "{key}.weak_limit = {:.16e}", e.limit);
                }
                if let Some(e) = &rec.strong {
                    let _ = writeln!(s, "{key}.strong_limit = {:.16e}", e.limit);
                }
            }
        }
        for (r, c) in &self.counts {
            let _ = writeln!(s, "count.R{r} = {c}");
        }
        let _ = writeln!(s, "overall = {}", if self.passed() { "pass" } else { "fail" });
        let _ = writeln!(s, "exit_status = {}", self.exit_code());
        s
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.name);
        if !self.description.is_empty() {
            let _ = writeln!(s, "{}", self.description);
        }
        for run in &self.runs {
            let _ = writeln!(s, "\n==== truncation radius {} ====", run.radius);
            s.push_str(&run.certificate.report());
        }
        if self.counts.len() > 1 {
            let _ = writeln!(s, "\n[strong counts by truncation radius]");
            for (r, c) in &self.counts {
                let _ = writeln!(s, "  R={r}: {c}");
            }
        }
        let _ = writeln!(s, "\n[overall]");
        for (name, v) in &self.verdicts {
            let _ = writeln!(s, "{name:<13} {} {}", v.label(), v.detail());
        }
        let _ = writeln!(s, "result: {}", if self.passed() { "pass" } else { "fail" });
        s
    }
}

/// Radial spectra of one obstacle condition over the configured grids.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSeries {
    pub radius: f64,
    pub inner: InnerCondition,
    pub spectra: Vec<RadialSpectrum>,
    /// Extrapolated ground state over the grids; `None` without eigenvalues.
    pub ground_state: Option<Extrapolation>,
}

impl OracleSeries {
    pub fn label(&self) -> String {
        match self.inner {
            InnerCondition::Dirichlet => "dirichlet".into(),
            InnerCondition::Robin(0.0) => "neumann".into(),
            InnerCondition::Robin(a) => format!("robin({a})"),
        }
    }
}

/// Runs the radial solver for the first field of a radial configuration:
/// Dirichlet always, plus the weak obstacle condition when it is rotation invariant.
pub fn run_oracle(config: &ExperimentConfig) -> Result<Vec<OracleSeries>> {
    config.validate()?;
    let Obstacle::Disk { radius: r0 } = config.domain.obstacle else {
        return Err(config_error("the radial oracle needs a disk obstacle".into()));
    };
    let field = &config.fields[0];
    if field.coefficient != crate::fields::CoefficientField::identity() {
        return Err(config_error("the radial oracle needs field1.coefficient = identity".into()));
    }
    let mut inners = vec![InnerCondition::Dirichlet];
    if config.kind != ComparisonKind::CoefficientPair && config.bc.is_full_circle() {
        inners.push(InnerCondition::Robin(config.bc.robin_alpha));
    }
    let mu = config.compare.probes.first().copied().unwrap_or(config.compare.threshold);
    let mut out = Vec::new();
    for &radius in &config.radii {
        for &inner in &inners {
            let mut spectra = Vec::new();
            for &n in &config.oracle_n_r {
                let mut p = RadialProblem::new(r0, radius, field.potential.clone(), inner, n);
                p.m_max = config.oracle_m_max;
                spectra.push(radial_eigs(&p, mu).map_err(|e| e.in_stage(format!("oracle R = {radius}, n_r = {n}")))?);
            }
            let data: Vec<(f64, f64)> =
                spectra.iter().filter_map(|s| s.ground_state().map(|g| ((radius - r0) / s.n_r as f64, g))).collect();
            let ground_state =
                if data.len() == spectra.len() && data.len() >= 3 { richardson_extrapolate(&data).ok() } else { None };
            out.push(OracleSeries { radius, inner, spectra, ground_state });
        }
    }
    Ok(out)
}

/// CSV of every oracle spectrum with the obstacle condition and radius prepended.
pub fn oracle_csv(series: &[OracleSeries]) -> String {
    let mut s = String::from("trunc_radius,inner,m,index,eigenvalue,n_r\n");
    for o in series {
        for spectrum in &o.spectra {
            for line in spectrum.to_csv().lines().skip(1) {
                let _ = writeln!(s, "{:.16e},{},{line}", o.radius, o.label());
            }
        }
    }
    s
}
