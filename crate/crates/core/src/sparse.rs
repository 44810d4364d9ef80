//! Compressed sparse row storage for the symmetric matrices produced by assembly.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Unordered list of `(row, col, value)` contributions.
///
/// Duplicates are summed in insertion order when converted, so the
/// resulting matrix depends only on the order entries were pushed.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_csr(mut self) -> CsrMatrix {
        // stable sort keeps insertion order among duplicates
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        CsrMatrix { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.into_csr()
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut t = Triplets::new(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            t.push(i, i, d);
        }
        t.into_csr()
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let mut t = Triplets::new(a.nrows());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push(i, j, a[(i, j)]);
                }
            }
        }
        t.into_csr()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Iterates over stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                x[i] * cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum::<f64>()
            })
            .sum()
    }

    /// `self + other` with the union sparsity pattern. Entries present in
    /// only one operand are copied unchanged.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        self.linear_combination(1.0, other, 1.0)
    }

    /// `a·self + b·other` with the union sparsity pattern. A coefficient of
    /// exactly 1 leaves the corresponding values untouched.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<CsrMatrix> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {}", self.n, other.n)));
        }
        let scale = |c: f64, v: f64| if c == 1.0 { v } else { c * v };
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        row_ptr.push(0);
        for i in 0..self.n {
            let (c1, v1) = self.row(i);
            let (c2, v2) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < c1.len() || q < c2.len() {
                let j1 = c1.get(p).copied().unwrap_or(usize::MAX);
                let j2 = c2.get(q).copied().unwrap_or(usize::MAX);
                if j1 == j2 {
                    col_idx.push(j1);
                    values.push(scale(a, v1[p]) + scale(b, v2[q]));
                    p += 1;
                    q += 1;
                } else if j1 < j2 {
                    col_idx.push(j1);
                    values.push(scale(a, v1[p]));
                    p += 1;
                } else {
                    col_idx.push(j2);
                    values.push(scale(b, v2[q]));
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { n: self.n, row_ptr, col_idx, values })
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Principal submatrix on `keep` (indices in the order given).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut t = Triplets::new(keep.len());
        for (k, &i) in keep.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if new_index[j] != usize::MAX {
                    t.push(k, new_index[j], v);
                }
            }
        }
        t.into_csr()
    }

    /// Exact transpose equality, entry by entry.
    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(i, j, v)| self.get(j, i) == v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    pub fn sum_entries(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Coordinate text export: one `row col value` line per stored entry,
    /// zero-based indices, values with 17 significant digits.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        for (i, j, v) in self.iter() {
            let _ = writeln!(out, "{} {} {:.16e}", i, j, v);
        }
        out
    }

    pub fn from_coordinate_text(n: usize, text: &str) -> Result<CsrMatrix> {
        let mut t = Triplets::new(n);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse(format!("coordinate line {}: {:?}", lineno + 1, line));
            if parts.len() != 3 {
                return Err(bad());
            }
            let i: usize = parts[0].parse().map_err(|_| bad())?;
            let j: usize = parts[1].parse().map_err(|_| bad())?;
            let v: f64 = parts[2].parse().map_err(|_| bad())?;
            if i >= n || j >= n {
                return Err(bad());
            }
            t.push(i, j, v);
        }
        Ok(t.into_csr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 2.0);
        t.push(0, 0, 0.5);
        let a = t.into_csr();
        assert_eq!(a.get(0, 0), 1.5);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn union_add_and_restrict() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let mut t = Triplets::new(3);
        t.push(0, 2, 4.0);
        t.push(2, 0, 4.0);
        let b = t.into_csr();
        let c = a.add(&b).unwrap();
        assert_eq!(c.nnz(), 5);
        assert!(c.is_symmetric());
        let r = c.restrict(&[0, 2]);
        assert_eq!(r.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 4.0, 3.0]));
        assert_eq!(c.quad_form(&[1.0, 1.0, 1.0]), 14.0);
    }

    #[test]
    fn coordinate_text_round_trip() {
        let a = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, 1.0 / 3.0, -2.5]));
        let text = a.to_coordinate_text();
        assert_eq!(text.lines().count(), 4);
        let b = CsrMatrix::from_coordinate_text(2, &text).unwrap();
        assert_eq!(a, b);
    }
}
