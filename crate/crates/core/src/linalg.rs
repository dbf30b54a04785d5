//! Sparse storage, sparse Cholesky, preconditioned CG and extreme eigenvalue estimates.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::LltError;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Side};

use crate::error::{Error, Result};

/// Symmetric sparse matrix; row `i` stores the columns `j >= i` (sorted).
///
/// Read column-wise the same arrays are the lower triangle, which is what the
/// Cholesky factorization consumes.
#[derive(Clone, Debug, Default)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Zero matrix with the given upper-triangle pattern; each row is sorted and deduplicated.
    pub fn from_pattern(n: usize, mut rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::InvalidInput(format!("pattern has {} rows, expected {n}", rows.len())));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0u32);
        let total: usize = rows.iter().map(|r| r.len()).sum();
        if total >= u32::MAX as usize {
            return Err(Error::InvalidInput("sparse pattern too large for 32-bit indices".into()));
        }
        let mut cols = Vec::with_capacity(total);
        for (i, r) in rows.iter_mut().enumerate() {
            r.retain(|&j| j as usize >= i);
            r.push(i as u32);
            r.sort_unstable();
            r.dedup();
            if r.last().is_some_and(|&j| j as usize >= n) {
                return Err(Error::InvalidInput(format!("column index out of range in row {i}")));
            }
            cols.extend_from_slice(r);
            row_ptr.push(cols.len() as u32);
            *r = Vec::new();
        }
        let vals = vec![0.0; cols.len()];
        Ok(SparseSym { n, row_ptr, cols, vals })
    }

    /// Builds from dense storage, keeping the nonzero upper triangle.
    pub fn from_dense(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let rows = (0..n)
            .map(|i| (i..n).filter(|&j| a[i][j] != 0.0).map(|j| j as u32).collect())
            .collect();
        let mut s = Self::from_pattern(n, rows)?;
        for i in 0..n {
            for j in i..n {
                if a[i][j] != 0.0 {
                    s.add(i, j, a[i][j]);
                }
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_upper(&self) -> usize {
        self.cols.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
        self.cols[lo..hi].binary_search(&(j as u32)).ok().map(|p| lo + p)
    }

    /// Adds `v` to entry `(i, j)` with `i <= j`; panics outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i <= j);
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.vals[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.position(a, b).map_or(0.0, |p| self.vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.vals[self.row_ptr[i] as usize]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let (lo, hi) = (self.row_ptr[i] as usize, self.row_ptr[i + 1] as usize);
            let xi = x[i];
            let mut acc = self.vals[lo] * xi;
            for p in lo + 1..hi {
                let j = self.cols[p] as usize;
                let v = self.vals[p];
                acc += v * x[j];
                y[j] += v * xi;
            }
            y[i] += acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for p in self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize {
                let j = self.cols[p] as usize;
                a[i][j] = self.vals[p];
                a[j][i] = self.vals[p];
            }
        }
        a
    }
}

/// General sparse matrix in compressed rows.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Csr {
    /// Sums duplicate `(row, col, value)` triplets.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(u32, u32, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            vals.push(v);
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.cols[p] as usize, self.vals[p]))
    }

    /// `y = M x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y = M^T x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            if xi != 0.0 {
                for (j, v) in self.row(i) {
                    y[j] += v * xi;
                }
            }
        }
        y
    }

    /// Columns holding at least one stored entry.
    pub fn nonzero_columns(&self) -> Vec<bool> {
        let mut used = vec![false; self.ncols];
        for (&j, &v) in self.cols.iter().zip(&self.vals) {
            if v != 0.0 {
                used[j as usize] = true;
            }
        }
        used
    }
}

/// Sparse Cholesky factorization (fill-reducing ordering chosen by faer).
pub struct Factorization {
    n: usize,
    llt: Llt<u32, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

pub fn factorize(a: &SparseSym) -> Result<Factorization> {
    let n = a.n;
    let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.cols);
    let symbolic =
        SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| Error::NotSpd(format!("symbolic factorization failed: {e:?}")))?;
    let mat = SparseColMatRef::new(sym, &a.vals);
    let llt = Llt::try_new_with_symbolic(symbolic, mat, Side::Lower).map_err(|e| match e {
        LltError::Numeric(e) => Error::NotSpd(format!("non-positive pivot: {e:?}")),
        LltError::Generic(e) => Error::NotSpd(format!("factorization failed: {e:?}")),
    })?;
    Ok(Factorization { n, llt })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let rhs = MatMut::from_column_major_slice_mut(b, self.n, 1);
        self.llt.solve_in_place_with_conj(Conj::No, rhs);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a CG run.
#[derive(Clone, Debug)]
pub struct PcgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// `op` and `precond` write their result into the second argument. The
/// residual is tracked by recurrence and checked against a true residual on exit.
pub fn pcg_solve(
    op: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    precond: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<PcgResult> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(PcgResult {
            x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut it = 0;
    let mut res = 1.0;
    while it < maxit {
        op(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !pq.is_finite() || !rz.is_finite() {
            return Err(Error::Breakdown(format!("non-finite value in CG at iteration {it}")));
        }
        if pq <= 0.0 {
            return Err(Error::Breakdown(format!("operator is not positive definite (p'Ap = {pq:e})")));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        it += 1;
        res = norm2(&r) / bnorm;
        if res <= tol {
            break;
        }
        precond(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    op(&x, &mut q)?;
    let true_res = b.iter().zip(&q).map(|(b, q)| (b - q) * (b - q)).sum::<f64>().sqrt() / bnorm;
    if !true_res.is_finite() {
        return Err(Error::Breakdown("non-finite residual after CG".into()));
    }
    Ok(PcgResult {
        x,
        iterations: it,
        residual: true_res.max(res.min(true_res)),
        converged: res <= tol,
    })
}

/// Largest and smallest eigenvalue of an SPD operator.
///
/// Power iteration on `op` and inverse iteration with `solve`, both stopped when the
/// Rayleigh quotient changes by less than `rtol` relative, or after `iters` steps.
pub fn extreme_eigs(
    op: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    solve: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    n: usize,
    iters: usize,
    rtol: f64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidInput("empty operator".into()));
    }
    let start = || -> Vec<f64> {
        // deterministic start vector with components along every direction
        let v: Vec<f64> = (0..n).map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
        let s = norm2(&v);
        v.into_iter().map(|x| x / s).collect()
    };
    let run = |f: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>| -> Result<f64> {
        let mut v = start();
        let mut w = vec![0.0; n];
        let mut rq = 0.0;
        for k in 0..iters.max(1) {
            f(&v, &mut w)?;
            let next = dot(&v, &w);
            let nw = norm2(&w);
            if !(nw > 0.0) || !nw.is_finite() {
                return Err(Error::Breakdown("eigenvalue iteration collapsed".into()));
            }
            for i in 0..n {
                v[i] = w[i] / nw;
            }
            if k > 0 && (next - rq).abs() <= rtol * next.abs() {
                return Ok(next);
            }
            rq = next;
        }
        Ok(rq)
    };
    let lmax = run(op)?;
    let inv = run(solve)?;
    Ok((lmax, 1.0 / inv))
}
