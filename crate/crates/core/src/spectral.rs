//! Generalized symmetric eigenproblems `A u = λ M u`: inertia counting and
//! eigenpairs below a threshold.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ldlt::{EnvelopeStructure, LdlFactor};
use crate::sparse::CsrMatrix;

/// Relative width used to decide that an eigenvalue sits "at" a probe.
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `‖Au − λMu‖ / ‖Mu‖` for every returned pair.
    pub tol: f64,
    /// Pencils with at most this many unknowns are solved densely.
    pub dense_cutoff: usize,
    /// Largest admissible number of eigenvalues below the threshold.
    pub max_count: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-9, dense_cutoff: 600, max_count: 400, max_iterations: 5000, seed: 0x5eed }
    }
}

/// Eigenpairs strictly below a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub threshold: f64,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountingReport {
    pub n_strictly_below: usize,
    pub n_at_mu: usize,
    pub n_below_or_equal: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub below: usize,
    /// Shift actually factored; differs from the request after a breakdown retry.
    pub shift: f64,
}

/// A pencil `(A, M)` with its symbolic factorization cached.
#[derive(Debug, Clone)]
pub struct Pencil<'a> {
    pub a: &'a CsrMatrix,
    pub m: &'a CsrMatrix,
    structure: EnvelopeStructure,
}

impl<'a> Pencil<'a> {
    pub fn new(a: &'a CsrMatrix, m: &'a CsrMatrix) -> Result<Self> {
        if a.dim() != m.dim() {
            return Err(Error::Dimension(format!("A is {}, M is {}", a.dim(), m.dim())));
        }
        let structure = EnvelopeStructure::analyze(&[a, m])?;
        Ok(Pencil { a, m, structure })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Factors `A − shift·M`, nudging the shift downward on a zero pivot.
    pub fn factor_shifted(&self, shift: f64) -> Result<(LdlFactor, f64)> {
        let mut s = shift;
        for _ in 0..8 {
            match self.structure.factor_combination(self.a, Some((self.m, -s))) {
                Ok(f) => return Ok((f, s)),
                Err(Error::Breakdown { .. }) => s -= 1e-10 * (1.0 + s.abs()),
                Err(e) => return Err(e),
            }
        }
        Err(Error::Breakdown { pivot: 0, shift: s })
    }

    /// Number of eigenvalues strictly below `mu` (negative pivots of `A − μM`).
    pub fn inertia(&self, mu: f64) -> Result<Inertia> {
        let (f, shift) = self.factor_shifted(mu)?;
        Ok(Inertia { below: f.negative_pivots(), shift })
    }

    pub fn count_below(&self, mu: f64) -> Result<usize> {
        Ok(self.inertia(mu)?.below)
    }

    /// Open and closed counts at `mu`; "at μ" means within `CLUSTER_TOL·(1 + |μ|)` above.
    pub fn counting_report(&self, mu: f64) -> Result<CountingReport> {
        let below = self.count_below(mu)?;
        let closed = self.count_below(mu + CLUSTER_TOL * (1.0 + mu.abs()))?;
        let closed = closed.max(below);
        Ok(CountingReport { n_strictly_below: below, n_at_mu: closed - below, n_below_or_equal: closed })
    }
}

/// Number of eigenvalues of `(A, M)` strictly below `mu`.
pub fn inertia_count(a: &CsrMatrix, m: &CsrMatrix, mu: f64) -> Result<Inertia> {
    Pencil::new(a, m)?.inertia(mu)
}

/// All eigenpairs strictly below `mu`, certified against the inertia count.
pub fn eigs_below(a: &CsrMatrix, m: &CsrMatrix, mu: f64, options: &SolverOptions) -> Result<SpectralResult> {
    let pencil = Pencil::new(a, m)?;
    eigs_below_pencil(&pencil, mu, options)
}

pub fn eigs_below_pencil(pencil: &Pencil, mu: f64, options: &SolverOptions) -> Result<SpectralResult> {
    let expected = pencil.count_below(mu)?;
    if expected > options.max_count {
        return Err(Error::TooManyEigenvalues { count: expected, limit: options.max_count, mu });
    }
    let result = if expected == 0 {
        SpectralResult { eigenvalues: vec![], eigenvectors: vec![], residuals: vec![], threshold: mu }
    } else if pencil.dim() <= options.dense_cutoff {
        let (values, vectors) = dense_generalized_eigen(pencil.a, pencil.m)?;
        let k = values.iter().take_while(|&&l| l < mu).count();
        let eigenvectors: Vec<Vec<f64>> = (0..k).map(|j| vectors.column(j).iter().copied().collect()).collect();
        let residuals = eigenvectors.iter().zip(&values).map(|(u, &l)| residual(pencil.a, pencil.m, u, l)).collect();
        SpectralResult { eigenvalues: values[..k].to_vec(), eigenvectors, residuals, threshold: mu }
    } else {
        block_krylov(pencil, mu, expected, options)?
    };
    if result.len() != expected {
        return Err(Error::CountMismatch { found: result.len(), expected, mu });
    }
    Ok(result)
}

/// `‖Au − λMu‖ / ‖Mu‖`.
pub fn residual(a: &CsrMatrix, m: &CsrMatrix, u: &[f64], lambda: f64) -> f64 {
    let au = a.mul_vec(u);
    let mu = m.mul_vec(u);
    let r: f64 = au.iter().zip(&mu).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt();
    let d: f64 = mu.iter().map(|y| y * y).sum::<f64>().sqrt();
    r / d
}

/// Dense generalized eigensolve through the Cholesky factor of `M`.
///
/// Eigenvalues ascending; eigenvector columns are M-orthonormal.
pub fn dense_generalized_eigen(a: &CsrMatrix, m: &CsrMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = m.to_dense().cholesky().ok_or(Error::MassNotPositive)?;
    let l = chol.l();
    let ad = a.to_dense();
    let x = l.solve_lower_triangular(&ad).ok_or(Error::MassNotPositive)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(Error::MassNotPositive)?;
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let u = l.transpose().solve_upper_triangular(&y).ok_or(Error::MassNotPositive)?;
    Ok((values, u))
}

fn m_dot(m: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    let my = m.mul_vec(y);
    x.iter().zip(&my).map(|(a, b)| a * b).sum()
}

/// Shift-invert block Krylov method with restarts.
///
/// The basis grows by blocks `T·W` with `T = (A − σM)⁻¹M` and `σ` just below
/// the smallest eigenvalue, so the wanted eigenvalues are the largest of `T`.
/// Rayleigh–Ritz with `A` runs every few blocks; once the basis is full the
/// leading Ritz vectors seed a fresh basis.
fn block_krylov(pencil: &Pencil, mu: f64, target: usize, options: &SolverOptions) -> Result<SpectralResult> {
    let n = pencil.dim();
    let (a, m) = (pencil.a, pencil.m);
    let (factor, _) = lower_shift(pencil, mu)?;
    let block = 4.min(n);
    let max_basis = (4 * target + 120).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut seed: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut best = f64::INFINITY;
    let mut applications = 0usize;

    loop {
        let mut basis = Basis::new(m, mu, target);
        let mut next = basis.extend(seed, a);
        let mut blocks = 0;
        loop {
            if next.is_empty() || basis.len() >= max_basis {
                break;
            }
            let expanded: Vec<Vec<f64>> = next.iter().map(|v| factor.solve(&m.mul_vec(v))).collect();
            applications += expanded.len();
            next = basis.extend(expanded, a);
            blocks += 1;
            if basis.len() >= target + block && blocks % 4 == 0 {
                let ritz = basis.ritz(a, m, target);
                best = best.min(ritz.worst);
                if ritz.converged(mu, target, options.tol) {
                    return Ok(ritz.into_result(target, mu));
                }
            }
            if applications > options.max_iterations * block {
                return Err(Error::NoConvergence { iterations: applications, best_residual: best });
            }
        }
        let ritz = basis.ritz(a, m, (target + block).min(basis.len()));
        best = best.min(ritz.worst);
        if ritz.converged(mu, target, options.tol) {
            return Ok(ritz.into_result(target, mu));
        }
        if basis.len() == n {
            return Err(Error::NoConvergence { iterations: applications, best_residual: best });
        }
        seed = ritz.vectors;
    }
}

/// M-orthonormal basis together with `A` applied to each column.
struct Basis<'a> {
    m: &'a CsrMatrix,
    mu: f64,
    wanted: usize,
    q: Vec<Vec<f64>>,
    mq: Vec<Vec<f64>>,
    aq: Vec<Vec<f64>>,
}

struct Ritz {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    worst: f64,
    below: usize,
}

impl Ritz {
    fn converged(&self, mu: f64, target: usize, tol: f64) -> bool {
        self.worst <= tol && self.below == target && self.values.get(target).is_none_or(|&v| v >= mu)
    }

    fn into_result(mut self, target: usize, mu: f64) -> SpectralResult {
        self.vectors.truncate(target);
        self.residuals.truncate(target);
        self.values.truncate(target);
        SpectralResult {
            eigenvalues: self.values,
            eigenvectors: self.vectors,
            residuals: self.residuals,
            threshold: mu,
        }
    }
}

impl<'a> Basis<'a> {
    fn new(m: &'a CsrMatrix, mu: f64, wanted: usize) -> Self {
        Basis { m, mu, wanted, q: vec![], mq: vec![], aq: vec![] }
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    /// Orthogonalizes `cols` against the basis (two passes of modified
    /// Gram–Schmidt), appends the independent ones and returns them.
    fn extend(&mut self, cols: Vec<Vec<f64>>, a: &CsrMatrix) -> Vec<Vec<f64>> {
        let first = self.q.len();
        for mut v in cols {
            let norm0 = m_dot(self.m, &v, &v).sqrt();
            for _ in 0..2 {
                for (q, mq) in self.q.iter().zip(&self.mq) {
                    let c: f64 = v.iter().zip(mq).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let mv = self.m.mul_vec(&v);
            let norm = v.iter().zip(&mv).map(|(x, y)| x * y).sum::<f64>().sqrt();
            if !(norm > 1e-10 * norm0) {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            self.mq.push(mv.into_iter().map(|x| x / norm).collect());
            self.aq.push(a.mul_vec(&v));
            self.q.push(v);
        }
        self.q[first..].to_vec()
    }

    /// Leading `keep` Ritz pairs of `A` on the basis.
    fn ritz(&self, a: &CsrMatrix, m: &CsrMatrix, keep: usize) -> Ritz {
        let k = self.q.len();
        let h = DMatrix::from_fn(k, k, |i, j| {
            let (p, q) = if i <= j { (i, j) } else { (j, i) };
            self.q[p].iter().zip(&self.aq[q]).map(|(s, t)| s * t).sum::<f64>()
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let all: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let keep = keep.min(k);
        let n = self.q[0].len();
        let vectors: Vec<Vec<f64>> = order[..keep]
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (r, qr) in self.q.iter().enumerate() {
                    let w = eig.eigenvectors[(r, c)];
                    v.iter_mut().zip(qr).for_each(|(s, t)| *s += w * t);
                }
                v
            })
            .collect();
        let residuals: Vec<f64> = vectors.iter().zip(&all).map(|(v, &l)| residual(a, m, v, l)).collect();
        let wanted = self.wanted.min(keep);
        let worst = residuals[..wanted].iter().copied().fold(0.0, f64::max);
        let below = all.iter().filter(|&&l| l < self.mu).count();
        let mut values = all;
        values.truncate(keep + 1);
        Ritz { below, values, vectors, residuals, worst }
    }
}

/// A shift below the smallest eigenvalue, located with inertia counts,
/// together with the factor of the shifted matrix.
fn lower_shift(pencil: &Pencil, mu: f64) -> Result<(LdlFactor, f64)> {
    let mut step = 1.0f64.max(mu.abs());
    loop {
        let (f, s) = pencil.factor_shifted(mu - step)?;
        if f.negative_pivots() == 0 {
            return Ok((f, s));
        }
        step *= 2.0;
        if !step.is_finite() {
            return Err(Error::Breakdown { pivot: 0, shift: mu - step });
        }
    }
}

/// Merges values within `tol·(1 + |λ|)` of their neighbour into
/// `(mean, multiplicity)` clusters. Input must be sorted ascending.
pub fn cluster_values(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    for &v in values {
        match prev {
            Some(p) if (v - p).abs() <= tol * (1.0 + p.abs()) => {
                let last = out.last_mut().unwrap();
                last.1 += 1;
                sum += v;
                last.0 = sum / last.1 as f64;
            }
            _ => {
                sum = v;
                out.push((v, 1));
            }
        }
        prev = Some(v);
    }
    out
}

pub fn cluster_multiplicity(result: &SpectralResult, cluster_tol: f64) -> Vec<(f64, usize)> {
    cluster_values(&result.eigenvalues, cluster_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    fn path_pencil(n: usize) -> (CsrMatrix, CsrMatrix) {
        // 1D Dirichlet Laplacian stiffness and consistent mass, plus a negative well
        let h = 1.0 / (n + 1) as f64;
        let mut a = Triplets::new(n);
        let mut m = Triplets::new(n);
        for i in 0..n {
            let x = (i + 1) as f64 * h;
            let v = if (0.3..0.6).contains(&x) { -400.0 } else { 0.0 };
            a.push(i, i, 2.0 / h + v * 2.0 * h / 3.0);
            m.push(i, i, 2.0 * h / 3.0);
            if i + 1 < n {
                a.push(i, i + 1, -1.0 / h + v * h / 6.0);
                a.push(i + 1, i, -1.0 / h + v * h / 6.0);
                m.push(i, i + 1, h / 6.0);
                m.push(i + 1, i, h / 6.0);
            }
        }
        (a.into_csr(), m.into_csr())
    }

    #[test]
    fn diagonal_example() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0, 3.0]);
        let m = CsrMatrix::identity(3);
        assert_eq!(inertia_count(&a, &m, 0.0).unwrap().below, 1);
        assert_eq!(inertia_count(&a, &m, -5.0).unwrap().below, 0);
        let r = eigs_below(&a, &m, 0.0, &SolverOptions::default()).unwrap();
        assert_eq!(r.eigenvalues, vec![-1.0]);
        let u = &r.eigenvectors[0];
        assert!((u[1].abs() - 1.0).abs() < 1e-14 && u[0] == 0.0 && u[2] == 0.0);
    }

    #[test]
    fn breakdown_retry_reports_shift() {
        let a = CsrMatrix::from_diagonal(&[1.0, -1.0, 3.0]);
        let m = CsrMatrix::identity(3);
        let inertia = inertia_count(&a, &m, 1.0).unwrap();
        assert!(inertia.shift < 1.0);
        assert_eq!(inertia.below, 1);
    }

    #[test]
    fn iterative_matches_dense() {
        let (a, m) = path_pencil(200);
        let (values, _) = dense_generalized_eigen(&a, &m).unwrap();
        let mu = 0.5 * (values[3] + values[4]);
        let opts = SolverOptions { dense_cutoff: 0, ..Default::default() };
        let r = eigs_below(&a, &m, mu, &opts).unwrap();
        assert_eq!(r.len(), 4);
        for (x, y) in r.eigenvalues.iter().zip(&values) {
            assert!((x - y).abs() <= 1e-9 * y.abs(), "{x} vs {y}");
        }
        // M-orthonormal
        for i in 0..4 {
            for j in 0..4 {
                let g = m_dot(&m, &r.eigenvectors[i], &r.eigenvectors[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn counting_report_closed_interval() {
        let a = CsrMatrix::from_diagonal(&[-2.0, -1.0, -1.0, 3.0]);
        let m = CsrMatrix::identity(4);
        let p = Pencil::new(&a, &m).unwrap();
        let below = p.counting_report(-1.0 - 1e-3).unwrap();
        assert_eq!((below.n_strictly_below, below.n_at_mu, below.n_below_or_equal), (1, 0, 1));
    }

    #[test]
    fn clustering() {
        let c = cluster_values(&[-2.0, -1.0, -1.0 + 1e-12], 1e-9);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], (-2.0, 1));
        assert_eq!(c[1].1, 2);
        assert!((c[1].0 + 1.0).abs() < 1e-12);
        assert!(cluster_values(&[], 1e-9).is_empty());
    }
}
