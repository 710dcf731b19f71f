//! Compressed sparse row matrices and the Krylov solvers used by the
//! time steppers.
//!
//! All finite-element operators on one mesh share the vertex-adjacency
//! pattern, so linear combinations are done value-by-value on a common
//! pattern instead of through a general sparse add.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from coordinate entries; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// A zero matrix on an explicit pattern. Column indices must be sorted
    /// within each row.
    pub fn zeros_with_pattern(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        let nnz = col_idx.len();
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Storage slot of entry (i, j), if it is part of the pattern.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    /// Coordinate-format view of the stored entries.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push((i, self.col_idx[s], self.values[s]));
            }
        }
        out
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    /// `self += alpha * other`; both matrices must share a pattern.
    pub fn add_scaled(&mut self, alpha: f64, other: &CsrMatrix) {
        assert!(self.same_pattern(other), "add_scaled: pattern mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    /// Linear combination of operators sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let (_, first) = terms[0];
        let mut out = first.clone();
        out.values.iter_mut().for_each(|v| *v = 0.0);
        for &(alpha, m) in terms {
            if alpha != 0.0 {
                out.add_scaled(alpha, m);
            }
        }
        out
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[s] * x[self.col_idx[s]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let mut row = 0.0;
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[s] * y[self.col_idx[s]];
            }
            acc += xi * row;
        }
        acc
    }

    pub fn transpose(&self) -> CsrMatrix {
        let trip: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &trip)
    }

    /// Transpose that reuses the pattern of a structurally symmetric matrix.
    pub fn transpose_same_pattern(&self) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[s];
                let t = self.slot(j, i).expect("transpose_same_pattern: pattern not symmetric");
                out.values[t] = self.values[s];
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// max |a_ij - a_ji| / max |a_ij|, zero for the zero matrix.
    pub fn symmetry_error(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut err = 0.0_f64;
        for (i, j, v) in self.triplets() {
            err = err.max((v - self.get(j, i)).abs());
        }
        err / scale
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.col_idx[s]] += self.values[s];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Spectral-norm-free size estimate used in tests: max row sum of |a_ij|.
pub fn inf_norm(a: &CsrMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| {
            a.values()[a.row_ptr()[i]..a.row_ptr()[i + 1]]
                .iter()
                .map(|v| v.abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_iter: 10_000,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn jacobi(a: &CsrMatrix) -> Result<Vec<f64>> {
    a.diagonal()
        .into_iter()
        .map(|d| {
            if d.is_finite() && d != 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::LinearSolve {
                    iterations: 0,
                    residual: f64::NAN,
                })
            }
        })
        .collect()
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive
/// definite systems. `x` holds the initial guess and receives the solution.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolverOptions) -> Result<usize> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let tol = (opts.rel_tol * bnorm).max(opts.abs_tol);
    let dinv = jacobi(a)?;
    let mut r = a.mul_vec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rnorm = norm2(&r);
    if rnorm <= tol {
        return Ok(0);
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
        if rnorm <= tol {
            return Ok(it);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolve {
        iterations: opts.max_iter,
        residual: rnorm,
    })
}

/// Jacobi-preconditioned BiCGSTAB for general non-singular systems.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolverOptions) -> Result<usize> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let tol = (opts.rel_tol * bnorm).max(opts.abs_tol);
    let dinv = jacobi(a)?;
    let mut r = a.mul_vec(x);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rnorm = norm2(&r);
    if rnorm <= tol {
        return Ok(0);
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=opts.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] * dinv[i];
        }
        a.mul_vec_into(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(it);
        }
        for i in 0..n {
            z[i] = s[i] * dinv[i];
        }
        a.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
        if rnorm <= tol {
            return Ok(it);
        }
        if omega == 0.0 {
            return Err(Error::LinearSolve {
                iterations: it,
                residual: rnorm,
            });
        }
    }
    Err(Error::LinearSolve {
        iterations: opts.max_iter,
        residual: rnorm,
    })
}

/// Picks CG for symmetric operators and BiCGSTAB otherwise.
pub fn solve(a: &CsrMatrix, b: &[f64], x: &mut [f64], symmetric: bool, opts: &SolverOptions) -> Result<usize> {
    if symmetric {
        pcg(a, b, x, opts)
    } else {
        bicgstab(a, b, x, opts)
    }
}
