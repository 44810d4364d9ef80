//! Separation-of-variables eigenvalue solver for radially symmetric problems
//! on the exterior of a disk.
//!
//! For angular mode `m` the substitution `w(r) = √r·u(r)` turns
//! `−u″ − u′/r + (m²/r²)u + V u = λu` into the symmetric Sturm–Liouville
//! problem `−w″ + ((m² − 1/4)/r² + V) w = λw` on `(r₀, R)`, discretized with
//! central differences on a uniform grid. Eigenvalues are isolated by
//! bisection on Sturm counts of the tridiagonal matrix.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fields::PotentialSpec;

/// Ground state of `radial_well(8, 1, 2)` on `1 < r < 12` with a Dirichlet
/// obstacle, extrapolated from `n_r ∈ {512, 1024, 2048}`.
pub const WELL_GROUND_DIRICHLET: f64 = -3.1047789756362785;
/// Same configuration with a Neumann obstacle.
pub const WELL_GROUND_NEUMANN: f64 = -6.1790545608603065;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerCondition {
    Dirichlet,
    /// `∂u/∂ν + αu = 0` with ν the outward normal of the exterior domain,
    /// i.e. `u′(r₀) = α u(r₀)`. `α = 0` is the Neumann condition.
    Robin(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProblem {
    pub r0: f64,
    pub r_max: f64,
    pub potential: PotentialSpec,
    pub inner: InnerCondition,
    pub m_max: usize,
    /// Requested number of grid intervals; raised to the nearest count that
    /// places every potential jump on a grid node.
    pub n_r: usize,
    /// Drops the `(m² − 1/4)/r²` term. Only useful for self-tests.
    pub disable_centrifugal: bool,
}

impl RadialProblem {
    pub fn new(r0: f64, r_max: f64, potential: PotentialSpec, inner: InnerCondition, n_r: usize) -> Self {
        RadialProblem { r0, r_max, potential, inner, m_max: 8, n_r, disable_centrifugal: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r_max > self.r0) {
            return Err(Error::InvalidDomain(format!("need 0 < r0 < R, got r0 = {}, R = {}", self.r0, self.r_max)));
        }
        if self.n_r < 64 {
            return Err(Error::GridTooCoarse(format!("n_r = {} is below the minimum of 64", self.n_r)));
        }
        if !self.potential.is_radial() {
            return Err(Error::InvalidField("radial oracle needs a radial potential".into()));
        }
        self.potential.validate()
    }

    /// Grid interval count actually used.
    pub fn aligned_intervals(&self) -> usize {
        let span = self.r_max - self.r0;
        let fractions: Vec<f64> = self
            .potential
            .radial_jumps()
            .into_iter()
            .filter(|&r| r > self.r0 && r < self.r_max)
            .map(|r| (r - self.r0) / span)
            .collect();
        (self.n_r..=2 * self.n_r)
            .find(|&n| {
                fractions.iter().all(|f| {
                    let x = f * n as f64;
                    (x - x.round()).abs() < 1e-9 * n as f64
                })
            })
            .unwrap_or(self.n_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialEigenvalue {
    pub value: f64,
    pub m: usize,
    /// 1-based index within mode `m`.
    pub index: usize,
    /// 2 for `m ≥ 1` (the ±m pair), 1 for `m = 0`.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSpectrum {
    pub eigenvalues: Vec<RadialEigenvalue>,
    pub n_r: usize,
    pub m_max: usize,
    pub mu: f64,
}

impl RadialSpectrum {
    /// Eigenvalues repeated according to multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues.iter().flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity)).collect()
    }

    pub fn ground_state(&self) -> Option<f64> {
        self.eigenvalues.first().map(|e| e.value)
    }

    /// CSV with header `m,index,eigenvalue,n_r`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,index,eigenvalue,n_r\n");
        for e in &self.eigenvalues {
            let _ = writeln!(out, "{},{},{:.16e},{}", e.m, e.index, e.value, self.n_r);
        }
        out
    }
}

/// Symmetric tridiagonal matrix for one angular mode.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x` (negative pivots of `T − x`).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut pivot = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            pivot = self.diag[i] - x - if i == 0 { 0.0 } else { e2 / pivot };
            if pivot == 0.0 {
                pivot = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if pivot < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin_lower(&self) -> f64 {
        (0..self.diag.len())
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i < self.off.len() { self.off[i].abs() } else { 0.0 };
                self.diag[i] - left - right
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The `k`-th smallest eigenvalue (0-based), known to lie in `[lo, hi)`.
    fn bisect(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn mode_matrix(p: &RadialProblem, m: usize, n: usize) -> Tridiagonal {
    let h = (p.r_max - p.r0) / n as f64;
    let jumps = p.potential.radial_jumps();
    let potential_at = |r: f64| -> f64 {
        let v = |x: f64| p.potential.radial_value(x).unwrap();
        let d = 1e-6 * h;
        if r < p.r0 + d {
            // boundary node: the domain lies on the outer side
            v(r + d)
        } else if jumps.iter().any(|&j| (j - r).abs() < 1e-9 * h) {
            0.5 * (v(r - d) + v(r + d))
        } else {
            v(r)
        }
    };
    let centrifugal = |r: f64| if p.disable_centrifugal { 0.0 } else { ((m * m) as f64 - 0.25) / (r * r) };
    let q = |i: usize| {
        let r = p.r0 + i as f64 * h;
        centrifugal(r) + potential_at(r)
    };
    let inv_h2 = 1.0 / (h * h);
    match p.inner {
        InnerCondition::Dirichlet => {
            // unknowns w_1 .. w_{n-1}
            let diag = (1..n).map(|i| 2.0 * inv_h2 + q(i)).collect();
            let off = vec![-inv_h2; n.saturating_sub(2)];
            Tridiagonal { diag, off }
        }
        InnerCondition::Robin(alpha) => {
            // unknowns w_0 .. w_{n-1}; ghost node w_{-1} = w_1 − 2hβ w_0 with β = 1/(2 r0) + α,
            // row 0 halved and the pencil symmetrized by diag(1/√2, 1, …)
            let beta = 0.5 / p.r0 + alpha;
            let mut diag: Vec<f64> = (0..n).map(|i| 2.0 * inv_h2 + q(i)).collect();
            diag[0] += 2.0 * beta / h;
            let mut off = vec![-inv_h2; n - 1];
            off[0] *= std::f64::consts::SQRT_2;
            Tridiagonal { diag, off }
        }
    }
}

/// All eigenvalues below `mu`, merged over modes `0..=m_max`.
///
/// `m_max` is doubled automatically while the last mode still contributes.
pub fn radial_eigs(problem: &RadialProblem, mu: f64) -> Result<RadialSpectrum> {
    problem.validate()?;
    let n = problem.aligned_intervals();
    let mut m_max = problem.m_max;
    loop {
        let mut out = Vec::new();
        let mut last_mode_count = 0;
        for m in 0..=m_max {
            let t = mode_matrix(problem, m, n);
            let count = t.count_below(mu);
            if count > n / 8 {
                return Err(Error::GridTooCoarse(format!(
                    "mode {m} has {count} eigenvalues below {mu} on {n} intervals; increase n_r"
                )));
            }
            let lo = t.gershgorin_lower().min(mu) - 1.0;
            for k in 0..count {
                out.push(RadialEigenvalue {
                    value: t.bisect(k, lo, mu),
                    m,
                    index: k + 1,
                    multiplicity: if m == 0 { 1 } else { 2 },
                });
            }
            last_mode_count = count;
            if problem.disable_centrifugal {
                break;
            }
        }
        if last_mode_count == 0 || problem.disable_centrifugal {
            out.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.m.cmp(&b.m)));
            return Ok(RadialSpectrum { eigenvalues: out, n_r: n, m_max, mu });
        }
        if m_max >= 4096 {
            return Err(Error::GridTooCoarse("angular mode bound exceeded 4096".into()));
        }
        m_max = 2 * m_max.max(1);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckReport {
    pub pass: bool,
    /// `(fem, oracle, relative error)` for matched pairs.
    pub pairs: Vec<(f64, f64, f64)>,
    pub unmatched_fem: Vec<f64>,
    pub unmatched_oracle: Vec<f64>,
    pub max_rel_error: f64,
    pub clusters_agree: bool,
}

/// Pairs ascending FEM eigenvalues with the oracle list (expanded by
/// multiplicity) and checks relative agreement and cluster structure.
pub fn oracle_crosscheck(fem: &[f64], oracle: &RadialSpectrum, rel_tol: f64) -> CrosscheckReport {
    let mut fem_sorted = fem.to_vec();
    fem_sorted.sort_by(f64::total_cmp);
    let reference = oracle.expanded();
    let n = fem_sorted.len().min(reference.len());
    let pairs: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| {
            let (f, o) = (fem_sorted[i], reference[i]);
            let rel = if o == 0.0 { (f - o).abs() } else { ((f - o) / o).abs() };
            (f, o, rel)
        })
        .collect();
    let unmatched_fem = fem_sorted[n..].to_vec();
    let unmatched_oracle = reference[n..].to_vec();
    let max_rel_error = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let fem_clusters: Vec<usize> =
        crate::spectral::cluster_values(&fem_sorted, 1e-8).into_iter().map(|c| c.1).collect();
    let oracle_clusters: Vec<usize> =
        crate::spectral::cluster_values(&reference, 1e-8).into_iter().map(|c| c.1).collect();
    let clusters_agree = fem_clusters == oracle_clusters;
    let pass = unmatched_fem.is_empty() && unmatched_oracle.is_empty() && max_rel_error <= rel_tol && clusters_agree;
    CrosscheckReport { pass, pairs, unmatched_fem, unmatched_oracle, max_rel_error, clusters_agree }
}
