//! Flat `key = value` configuration files.
//!
//! One assignment per line, keys may be dotted (`domain.trunc_radius`),
//! `#` starts a comment. Unknown keys and repeated keys are rejected with the
//! offending line number.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use super::ExperimentConfig;
use crate::comparison::{CompareOptions, ComparisonKind, StrictSelection};
use crate::error::{Error, Result};
use crate::fields::{Ball, BumpProfile, CoefficientField, OperatorField, PotentialSpec};
use crate::geometry::{BoundarySpec, DomainSpec, Obstacle};
use crate::spectral::SolverOptions;

const KEYS: &[&str] = &[
    "name",
    "description",
    "comparison",
    "domain.obstacle",
    "domain.obstacle_radius",
    "domain.polygon",
    "domain.trunc_radius",
    "domain.grading",
    "domain.angular_cells",
    "domain.radial_cells",
    "domain.align_radii",
    "mesh.levels",
    "bc.omega",
    "bc.alpha",
    "field1.potential",
    "field1.coefficient",
    "field2.potential",
    "field2.coefficient",
    "strict.ball",
    "strict.indices",
    "threshold",
    "probes",
    "solver.tol",
    "solver.dense_cutoff",
    "solver.max_count",
    "solver.max_iterations",
    "solver.seed",
    "truncation.factor",
    "counts.require_growth",
    "oracle.n_r",
    "oracle.m_max",
    "output.dir",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { line: line_no, message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config { line: line_no, message: format!("unknown key `{key}`") });
            }
            if let Some((first, _)) = map.get(&key) {
                return Err(Error::Config { line: line_no, message: format!("`{key}` already set on line {first}") });
            }
            map.insert(key, (line_no, value.trim().to_string()));
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => parse(v).map(Some).map_err(|m| Error::Config { line, message: format!("`{key}`: {m}") }),
        }
    }

    fn require<T>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
        self.get(key, parse)?.ok_or_else(|| Error::Config { line: 0, message: format!("missing required key `{key}`") })
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map_or(0, |r| r.0)
    }
}

fn number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn integer<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a nonnegative integer", s.trim()))
}

fn list<T>(s: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(item).collect()
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

/// Splits `name(a, b, c)` into the name and its numeric/word arguments.
fn call(s: &str) -> std::result::Result<(String, Vec<String>), String> {
    let s = s.trim();
    match s.split_once('(') {
        None => Ok((s.to_string(), vec![])),
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| format!("missing `)` in `{s}`"))?;
            let args = inner.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
            Ok((name.trim().to_string(), args))
        }
    }
}

fn profile(arg: Option<&String>) -> std::result::Result<BumpProfile, String> {
    match arg.map(String::as_str) {
        None | Some("indicator") => Ok(BumpProfile::Indicator),
        Some("smooth") => Ok(BumpProfile::Smooth),
        Some(other) => Err(format!("unknown bump profile `{other}`")),
    }
}

fn numbers(
    args: &[String],
    range: std::ops::RangeInclusive<usize>,
    what: &str,
) -> std::result::Result<Vec<f64>, String> {
    if !range.contains(&args.len()) {
        return Err(format!("{what} takes {}..={} arguments, got {}", range.start(), range.end(), args.len()));
    }
    args.iter().take(*range.start()).map(|a| number(a)).collect()
}

/// `zero`, `constant(c)`, `radial_well(depth, r1, r2)`, `radial_power(alpha, eps, r0)`,
/// `ball_bump(x, y, radius, height[, indicator|smooth])`, joined by `+`.
pub fn parse_potential(s: &str, obstacle_radius: f64) -> std::result::Result<PotentialSpec, String> {
    let mut terms = Vec::new();
    for term in s.split('+') {
        let (name, args) = call(term)?;
        let v = match name.as_str() {
            "zero" => PotentialSpec::Zero,
            "constant" => PotentialSpec::Constant(numbers(&args, 1..=1, "constant")?[0]),
            "radial_well" => {
                let a = numbers(&args, 3..=3, "radial_well")?;
                PotentialSpec::radial_well(a[0], a[1], a[2])
            }
            "radial_power" => {
                let a = numbers(&args, 3..=3, "radial_power")?;
                PotentialSpec::radial_power(a[0], a[1], a[2], obstacle_radius)
            }
            "ball_bump" => {
                let a = numbers(&args, 4..=5, "ball_bump")?;
                let ball = Ball::new([a[0], a[1]], a[2], profile(args.get(4))?);
                PotentialSpec::BallBump { ball, height: a[3] }
            }
            other => return Err(format!("unknown potential `{other}`")),
        };
        terms.push(v);
    }
    let v = if terms.len() == 1 { terms.pop().unwrap() } else { PotentialSpec::Sum(terms) };
    v.validate().map_err(|e| e.to_string())?;
    Ok(v)
}

/// `identity`, `scaled(c)` or `matrix(a11, a12, a22)`, optionally followed by
/// `+ bump(x, y, radius, amplitude[, indicator|smooth])`.
pub fn parse_coefficient(s: &str) -> std::result::Result<CoefficientField, String> {
    let mut parts = s.split('+');
    let (name, args) = call(parts.next().unwrap_or(""))?;
    let mut field = match name.as_str() {
        "identity" if args.is_empty() => CoefficientField::identity(),
        "scaled" => CoefficientField::scaled_identity(numbers(&args, 1..=1, "scaled")?[0]),
        "matrix" => {
            let a = numbers(&args, 3..=3, "matrix")?;
            CoefficientField { base: [a[0], a[1], a[2]], bump: None }
        }
        other => return Err(format!("unknown coefficient `{other}`")),
    };
    for extra in parts {
        let (name, args) = call(extra)?;
        if name != "bump" || field.bump.is_some() {
            return Err(format!("expected a single `bump(...)` term, got `{}`", extra.trim()));
        }
        let a = numbers(&args, 4..=5, "bump")?;
        field = field.with_bump(Ball::new([a[0], a[1]], a[2], profile(args.get(4))?), a[3]);
    }
    Ok(field)
}

/// `none`, `full`, or comma-separated `a:b` angle intervals; `pi` may be used
/// as a factor (`0:1pi`, `0.5pi:1.5pi`).
pub fn parse_omega(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let angle = |t: &str| -> std::result::Result<f64, String> {
        let t = t.trim();
        match t.strip_suffix("pi") {
            Some("") => Ok(PI),
            Some(f) => Ok(number(f)? * PI),
            None => number(t),
        }
    };
    match s.trim() {
        "none" => Ok(vec![]),
        "full" => Ok(vec![(0.0, 2.0 * PI)]),
        _ => list(s, |iv| {
            let (a, b) = iv.split_once(':').ok_or_else(|| format!("interval `{}` needs the form a:b", iv.trim()))?;
            Ok((angle(a)?, angle(b)?))
        }),
    }
}

fn parse_polygon(s: &str) -> std::result::Result<Vec<[f64; 2]>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let c: Vec<&str> = p.split_whitespace().collect();
            if c.len() != 2 {
                return Err(format!("polygon vertex `{}` needs two coordinates", p.trim()));
            }
            Ok([number(c[0])?, number(c[1])?])
        })
        .collect()
}

fn parse_strict(s: &str) -> std::result::Result<StrictSelection, String> {
    let s = s.trim();
    if s == "none" {
        return Ok(StrictSelection::None);
    }
    if let Some(rest) = s.strip_prefix("below(").and_then(|r| r.strip_suffix(')')) {
        return Ok(StrictSelection::Below(number(rest)?));
    }
    let ks: Vec<usize> = list(s, integer)?;
    if ks.contains(&0) {
        return Err("indices are 1-based".into());
    }
    Ok(StrictSelection::Indices(ks))
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let e = Entries::parse(text)?;
    let name = e.get("name", |s| Ok(s.to_string()))?.unwrap_or_else(|| "experiment".into());
    let description = e.get("description", |s| Ok(s.to_string()))?.unwrap_or_default();
    let kind =
        e.require("comparison", |s| ComparisonKind::parse(s).ok_or_else(|| format!("unknown comparison kind `{s}`")))?;

    let radii = e.require("domain.trunc_radius", |s| list(s, number))?;
    if radii.is_empty() {
        return Err(Error::Config { line: e.line("domain.trunc_radius"), message: "no truncation radius".into() });
    }
    let obstacle = match e.get("domain.obstacle", |s| Ok(s.to_string()))?.as_deref().unwrap_or("disk") {
        "disk" => Obstacle::Disk { radius: e.get("domain.obstacle_radius", number)?.unwrap_or(1.0) },
        "polygon" => Obstacle::Polygon { vertices: e.require("domain.polygon", parse_polygon)? },
        other => {
            return Err(Error::Config {
                line: e.line("domain.obstacle"),
                message: format!("unknown obstacle `{other}`"),
            })
        }
    };
    let mut domain = DomainSpec::disk(1.0, radii[0]);
    domain.obstacle = obstacle;
    if let Some(g) = e.get("domain.grading", number)? {
        domain.grading = g;
    }
    if let Some(n) = e.get("domain.angular_cells", integer)? {
        domain.angular_cells = n;
    }
    if let Some(n) = e.get("domain.radial_cells", integer)? {
        domain.radial_cells = n;
    }
    if let Some(r) = e.get("domain.align_radii", |s| list(s, number))? {
        domain.align_radii = r;
    }
    for &r in &radii {
        DomainSpec { trunc_radius: r, ..domain.clone() }
            .validate()
            .map_err(|err| Error::Config { line: e.line("domain.trunc_radius"), message: err.to_string() })?;
    }

    let levels = e.get("mesh.levels", |s| list(s, integer))?.unwrap_or_else(|| vec![1, 2, 3]);
    if levels.is_empty() || levels.windows(2).any(|w: &[u32]| w[1] <= w[0]) {
        return Err(Error::Config {
            line: e.line("mesh.levels"),
            message: "levels must be strictly increasing".into(),
        });
    }

    let omega = e.get("bc.omega", parse_omega)?;
    let alpha = e.get("bc.alpha", number)?.unwrap_or(0.0);
    let bc = match (kind, omega) {
        (ComparisonKind::DirichletVsNeumann, None) => BoundarySpec::neumann(),
        (_, Some(omega)) => BoundarySpec::mixed(omega, alpha),
        (_, None) => BoundarySpec::dirichlet(),
    };
    bc.validate().map_err(|err| Error::Config { line: e.line("bc.omega"), message: err.to_string() })?;

    let r0 = domain.obstacle.outer_radius();
    let field = |i: usize| -> Result<Option<OperatorField>> {
        let pot = e.get(&format!("field{i}.potential"), |s| parse_potential(s, r0))?;
        let coef = e.get(&format!("field{i}.coefficient"), parse_coefficient)?;
        Ok(match (pot, coef) {
            (None, None) => None,
            (p, c) => {
                Some(OperatorField::new(c.unwrap_or_else(CoefficientField::identity), p.unwrap_or(PotentialSpec::Zero)))
            }
        })
    };
    let fields: Vec<OperatorField> = [field(1)?, field(2)?].into_iter().flatten().collect();
    let strict_ball = e.get("strict.ball", |s| {
        let v = list(s, number)?;
        if v.len() != 3 {
            return Err("expected `x, y, radius`".into());
        }
        Ok(([v[0], v[1]], v[2]))
    })?;

    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        tol: e.get("solver.tol", number)?.unwrap_or(defaults.tol),
        dense_cutoff: e.get("solver.dense_cutoff", integer)?.unwrap_or(defaults.dense_cutoff),
        max_count: e.get("solver.max_count", integer)?.unwrap_or(defaults.max_count),
        max_iterations: e.get("solver.max_iterations", integer)?.unwrap_or(defaults.max_iterations),
        seed: e.get("solver.seed", integer)?.unwrap_or(defaults.seed),
    };
    let probes = match e.get("probes", |s| Ok(s.trim().to_string()))? {
        None => vec![],
        Some(s) if s == "auto" => vec![],
        Some(_) => e.require("probes", |s| list(s, number))?,
    };
    let compare = CompareOptions {
        threshold: e.get("threshold", number)?.unwrap_or(0.0),
        probes,
        strict: e.get("strict.indices", parse_strict)?.unwrap_or(StrictSelection::Indices(vec![1])),
        solver,
    };
    let config = ExperimentConfig {
        name,
        description,
        kind,
        domain,
        radii,
        bc,
        fields,
        strict_ball,
        levels,
        compare,
        truncation_factor: e.get("truncation.factor", number)?.filter(|&f| f > 0.0),
        require_count_growth: e.get("counts.require_growth", boolean)?.unwrap_or(false),
        oracle_n_r: e.get("oracle.n_r", |s| list(s, integer))?.unwrap_or_else(|| vec![512, 1024, 2048]),
        oracle_m_max: e.get("oracle.m_max", integer)?.unwrap_or(8),
        output_dir: e.get("output.dir", |s| Ok(PathBuf::from(s)))?,
    };
    config.validate().map_err(|err| match err {
        Error::Config { line: 0, message } => {
            let key = ["comparison", "probes", "threshold", "strict.ball", "bc.omega"]
                .into_iter()
                .find(|k| message.contains(k))
                .unwrap_or("comparison");
            Error::Config { line: e.line(key), message }
        }
        other => other,
    })?;
    Ok(config)
}
