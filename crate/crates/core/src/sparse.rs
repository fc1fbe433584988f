//! Compressed sparse row storage and a Jacobi-preconditioned conjugate
//! gradient solver with Dirichlet nodes handled through a free-node mask.

use crate::error::{Error, Result};
use crate::scalar::{as_f64, Scalar};

/// Square sparse matrix in CSR form with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct SparseMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Builds from per-row entry lists; entries in one row are summed if
    /// duplicated and stored sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    let j = vals.len() - 1;
                    vals[j] = vals[j] + v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .find(|(c, _)| **c == i)
                    .map(|(_, v)| *v)
                    .unwrap_or_else(T::zero)
            })
            .collect()
    }

    /// y = A x
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                s += *v * x[*c];
            }
            y[i] = s;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn row_sum(&self, i: usize) -> T {
        let (_, vals) = self.row(i);
        vals.iter().copied().fold(T::zero(), |a, b| a + b)
    }

    /// Largest |A_ij - A_ji|; exact zero for matrices assembled edge-wise.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let (bc, bv) = self.row(*c);
                let back = bc
                    .iter()
                    .zip(bv)
                    .find(|(cc, _)| **cc == i)
                    .map(|(_, vv)| *vv)
                    .unwrap_or_else(T::zero);
                worst = worst.max((*v - back).abs());
            }
        }
        worst
    }
}

/// Outcome of an iterative linear solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

/// Number of non-improving iterations after which CG is declared stagnant.
const STAGNATION_WINDOW: usize = 500;

/// Jacobi-preconditioned CG on the free nodes of `A + diag(extra)`.
///
/// Entries of `x` with `free[i] == false` are treated as pinned Dirichlet
/// values and participate only through the matvec. `b` is read on free nodes.
pub fn cg_masked<T: Scalar>(
    a: &SparseMatrix<T>,
    extra_diag: Option<&[T]>,
    b: &[T],
    x: &mut [T],
    free: &[bool],
    rel_tol: T,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = a.nrows();
    let diag = {
        let mut d = a.diagonal();
        if let Some(e) = extra_diag {
            for i in 0..n {
                d[i] += e[i];
            }
        }
        d
    };
    let full_op = |x: &[T], y: &mut [T]| {
        a.matvec(x, y);
        if let Some(e) = extra_diag {
            for i in 0..n {
                y[i] += e[i] * x[i];
            }
        }
    };

    let mut ax = vec![T::zero(); n];
    full_op(x, &mut ax);
    let mut r: Vec<T> = (0..n)
        .map(|i| if free[i] { b[i] - ax[i] } else { T::zero() })
        .collect();

    let norm_b = {
        let s: T = (0..n)
            .filter(|&i| free[i])
            .map(|i| b[i] * b[i])
            .fold(T::zero(), |a, v| a + v);
        s.sqrt()
    };
    let scale = if norm_b > T::zero() { norm_b } else { T::one() };

    let mut z: Vec<T> = (0..n).map(|i| r[i] / diag[i].max(T::min_positive_value())).collect();
    for i in 0..n {
        if !free[i] {
            z[i] = T::zero();
        }
    }
    let mut p = z.clone();
    let mut rz: T = r.iter().zip(&z).map(|(a, b)| *a * *b).fold(T::zero(), |a, v| a + v);

    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_iter = 0usize;
    let mut ap = vec![T::zero(); n];

    for k in 0..max_iter {
        let rnorm: T = r
            .iter()
            .map(|v| *v * *v)
            .fold(T::zero(), |a, v| a + v)
            .sqrt();
        let rel = as_f64(rnorm / scale);
        history.push(rel);
        if rel <= as_f64(rel_tol) {
            return Ok(SolveReport {
                iterations: k,
                relative_residual: rel,
                converged: true,
                residual_history: history,
            });
        }
        if rel < best * 0.999 {
            best = rel;
            best_iter = k;
        } else if k - best_iter > STAGNATION_WINDOW {
            return Err(Error::Stagnation {
                iterations: k,
                residual: rel,
                history,
            });
        }

        full_op(&p, &mut ap);
        for i in 0..n {
            if !free[i] {
                ap[i] = T::zero();
            }
        }
        let pap: T = p.iter().zip(&ap).map(|(a, b)| *a * *b).fold(T::zero(), |a, v| a + v);
        if pap <= T::zero() {
            break; // matrix not positive definite on the free set
        }
        let alpha = rz / pap;
        for i in 0..n {
            if free[i] {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
        }
        for i in 0..n {
            z[i] = if free[i] {
                r[i] / diag[i].max(T::min_positive_value())
            } else {
                T::zero()
            };
        }
        let rz_new: T = r.iter().zip(&z).map(|(a, b)| *a * *b).fold(T::zero(), |a, v| a + v);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let rnorm: T = r
        .iter()
        .map(|v| *v * *v)
        .fold(T::zero(), |a, v| a + v)
        .sqrt();
    let rel = as_f64(rnorm / scale);
    history.push(rel);
    Ok(SolveReport {
        iterations: max_iter,
        relative_residual: rel,
        converged: rel <= as_f64(rel_tol),
        residual_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![(i, 2.0)];
                if i > 0 {
                    row.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    row.push((i + 1, -1.0));
                }
                row
            })
            .collect();
        SparseMatrix::from_rows(rows)
    }

    #[test]
    fn cg_solves_spd_tridiagonal() {
        let n = 64;
        let a = tridiag(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.apply(&x_true);
        let free = vec![true; n];
        let mut x = vec![0.0; n];
        let rep = cg_masked(&a, None, &b, &mut x, &free, 1e-12, 10_000).unwrap();
        assert!(rep.converged);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-8, "node {i}");
        }
    }

    #[test]
    fn cg_respects_pinned_nodes() {
        let n = 32;
        let a = tridiag(n);
        let mut free = vec![true; n];
        free[0] = false;
        free[n - 1] = false;
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        x[n - 1] = 3.0;
        let b = vec![0.0; n];
        let rep = cg_masked(&a, None, &b, &mut x, &free, 1e-13, 10_000).unwrap();
        assert!(rep.converged);
        // interior of a discrete Laplace equation: linear interpolation
        for i in 0..n {
            let expect = 1.0 + 2.0 * i as f64 / (n as f64 - 1.0);
            assert!((x[i] - expect).abs() < 1e-7);
        }
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let a = SparseMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)], vec![(1, 4.0)]]);
        assert_eq!(a.diagonal(), vec![3.0, 4.0]);
        assert_eq!(a.nnz(), 2);
    }
}
