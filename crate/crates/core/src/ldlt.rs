//! Envelope (profile) LDLᵀ factorization of symmetric sparse matrices.
//!
//! Rows and columns are symmetrically permuted with reverse Cuthill–McKee
//! before factoring. A symmetric permutation is a congruence, so the count
//! of negative pivots equals the number of negative eigenvalues of the
//! original matrix (Sylvester's law of inertia).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative pivot magnitude below which the factorization is treated as broken down.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`.
///
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut neighbours = Vec::new();
    while order.len() < n {
        // start each component from a minimum-degree vertex
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        let start = pseudo_peripheral(a, start, &degree);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            neighbours.clear();
            neighbours.extend(a.row(v).0.iter().copied().filter(|&j| !visited[j]));
            neighbours.sort_by_key(|&j| (degree[j], j));
            for &j in &neighbours {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(a: &CsrMatrix, start: usize, degree: &[usize]) -> usize {
    let mut root = start;
    let mut depth = 0;
    for _ in 0..8 {
        let levels = bfs_levels(a, root);
        let max_level = *levels.iter().flatten().max().unwrap_or(&0);
        if max_level <= depth && depth > 0 {
            break;
        }
        depth = max_level;
        let candidate = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(max_level))
            .map(|(i, _)| i)
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        if candidate == root {
            break;
        }
        root = candidate;
    }
    root
}

fn bfs_levels(a: &CsrMatrix, root: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.dim()];
    let mut queue = VecDeque::new();
    level[root] = Some(0);
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        let next = level[v].unwrap() + 1;
        for &j in a.row(v).0 {
            if level[j].is_none() {
                level[j] = Some(next);
                queue.push_back(j);
            }
        }
    }
    level
}

/// Symbolic structure shared by every factorization of matrices with a
/// given sparsity pattern.
#[derive(Debug, Clone)]
pub struct EnvelopeStructure {
    perm: Vec<usize>,
    inverse: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
}

impl EnvelopeStructure {
    /// Builds the ordering and envelope from the union pattern of `patterns`.
    pub fn analyze(patterns: &[&CsrMatrix]) -> Result<Self> {
        let n = patterns.first().map(|a| a.dim()).unwrap_or(0);
        let mut union = CsrMatrix::zeros(n);
        for a in patterns {
            union = union.add(a)?;
        }
        let perm = reverse_cuthill_mckee(&union);
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inverse[old];
            for &c in union.row(old).0 {
                let j = inverse[c];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        Ok(EnvelopeStructure { perm, inverse, first, offset })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored lower-triangular entries.
    pub fn envelope_size(&self) -> usize {
        *self.offset.last().unwrap_or(&0)
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.dim()).map(|i| i - self.first[i]).max().unwrap_or(0)
    }

    /// Factors `a + shift_coeff·b` where both share (a subset of) the analyzed pattern.
    pub fn factor_combination(&self, a: &CsrMatrix, b: Option<(&CsrMatrix, f64)>) -> Result<LdlFactor> {
        let n = self.dim();
        if a.dim() != n || b.is_some_and(|(m, _)| m.dim() != n) {
            return Err(Error::Dimension("matrix does not match analyzed structure".into()));
        }
        let mut env = vec![0.0; self.envelope_size()];
        let scatter = |m: &CsrMatrix, c: f64, env: &mut [f64]| -> Result<()> {
            for (old_i, old_j, v) in m.iter() {
                let (i, j) = (self.inverse[old_i], self.inverse[old_j]);
                if j > i {
                    continue;
                }
                if j < self.first[i] {
                    return Err(Error::Dimension("entry outside analyzed envelope".into()));
                }
                env[self.offset[i] + (j - self.first[i])] += c * v;
            }
            Ok(())
        };
        scatter(a, 1.0, &mut env)?;
        if let Some((m, c)) = b {
            scatter(m, c, &mut env)?;
        }
        self.factor_envelope(env)
    }

    fn factor_envelope(&self, mut env: Vec<f64>) -> Result<LdlFactor> {
        let n = self.dim();
        let scale = (0..n).map(|i| env[self.offset[i + 1] - 1].abs()).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let mut d = vec![0.0; n];
        let mut negatives = 0;
        for i in 0..n {
            let fi = self.first[i];
            let row_i = self.offset[i];
            // after this loop env[row_i + (j - fi)] holds c_j = l_ij d_j
            for j in fi..i {
                let fj = self.first[j];
                let lo = fi.max(fj);
                let row_j = self.offset[j];
                let mut s = env[row_i + (j - fi)];
                let ci = &env[row_i + (lo - fi)..row_i + (j - fi)];
                let lj = &env[row_j + (lo - fj)..row_j + (j - fj)];
                for (c, l) in ci.iter().zip(lj) {
                    s -= c * l;
                }
                env[row_i + (j - fi)] = s;
            }
            let mut diag = env[row_i + (i - fi)];
            for j in fi..i {
                let c = env[row_i + (j - fi)];
                let l = c / d[j];
                diag -= c * l;
                env[row_i + (j - fi)] = l;
            }
            if !diag.is_finite() || diag.abs() <= PIVOT_TOLERANCE * scale {
                return Err(Error::Breakdown { pivot: i, shift: 0.0 });
            }
            if diag < 0.0 {
                negatives += 1;
            }
            d[i] = diag;
            env[row_i + (i - fi)] = 1.0;
        }
        Ok(LdlFactor { structure: self.clone(), values: env, diag: d, negatives })
    }
}

/// Numeric LDLᵀ factor of a permuted symmetric matrix.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    structure: EnvelopeStructure,
    values: Vec<f64>,
    diag: Vec<f64>,
    negatives: usize,
}

impl LdlFactor {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        EnvelopeStructure::analyze(&[a])?.factor_combination(a, None)
    }

    /// Number of negative pivots, i.e. negative eigenvalues of the factored matrix.
    pub fn negative_pivots(&self) -> usize {
        self.negatives
    }

    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let s = &self.structure;
        let n = s.dim();
        let mut x: Vec<f64> = (0..n).map(|i| rhs[s.perm[i]]).collect();
        for i in 0..n {
            let fi = s.first[i];
            let row = &self.values[s.offset[i]..s.offset[i] + (i - fi)];
            let dot: f64 = row.iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] -= dot;
        }
        for (xi, di) in x.iter_mut().zip(&self.diag) {
            *xi /= di;
        }
        for i in (0..n).rev() {
            let fi = s.first[i];
            let xi = x[i];
            let row = &self.values[s.offset[i]..s.offset[i] + (i - fi)];
            for (l, v) in row.iter().zip(&mut x[fi..i]) {
                *v -= l * xi;
            }
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[s.perm[i]] = x[i];
        }
        out
    }
}
