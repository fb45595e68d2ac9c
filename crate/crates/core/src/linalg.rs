//! Sparse square matrices and the two solvers behind the Katz systems: a
//! sparse LU factorization for moderate sizes and preconditioned BiCGSTAB
//! above that.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse rows. Entries within a row are sorted by column with no
/// repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums repeated `(row, col)` entries; explicit zeros are kept so the
    /// pattern reflects every contributing term.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    /// Structural nonzero positions, row-major.
    pub fn pattern(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, _)| (i, j)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(pos) => self.vals[r.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    /// Direct factorization up to [`DIRECT_SOLVE_LIMIT`] unknowns, Krylov above.
    Auto,
    SparseLu,
    BiCgStab,
}

/// Largest system handed to the sparse LU under [`SolverChoice::Auto`].
pub const DIRECT_SOLVE_LIMIT: usize = 10_000;

/// Relative residual the iterative solver aims for.
pub const KRYLOV_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    /// `‖b − Mx‖₂ / ‖b‖₂`.
    pub relative_residual: f64,
    pub iterations: usize,
    pub method: &'static str,
}

pub fn solve(m: &CsrMatrix, b: &[f64], choice: SolverChoice) -> Result<SolveOutcome> {
    let use_direct = match choice {
        SolverChoice::Auto => m.dim() <= DIRECT_SOLVE_LIMIT,
        SolverChoice::SparseLu => true,
        SolverChoice::BiCgStab => false,
    };
    if use_direct {
        sparse_lu(m, b)
    } else {
        bicgstab(m, b, KRYLOV_TOLERANCE, 10 * m.dim())
    }
}

pub fn relative_residual(m: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mx = m.mul_vec(x);
    let r = norm2(&mx.iter().zip(b).map(|(a, b)| b - a).collect::<Vec<_>>());
    let nb = norm2(b);
    if nb == 0.0 {
        r
    } else {
        r / nb
    }
}

fn sparse_lu(m: &CsrMatrix, b: &[f64]) -> Result<SolveOutcome> {
    let n = m.dim();
    let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
        .flat_map(|i| m.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
        .collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Solver(format!("assembly failed: {e:?}")))?;
    let lu = a
        .sp_lu()
        .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(
            "LU solve produced non-finite values (singular matrix)".into(),
        ));
    }
    let relative_residual = relative_residual(m, &x, b);
    Ok(SolveOutcome {
        x,
        relative_residual,
        iterations: 1,
        method: "sparse-lu",
    })
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Jacobi-preconditioned BiCGSTAB (right preconditioning, so the monitored
/// residual is the true one up to round-off).
pub fn bicgstab(m: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<SolveOutcome> {
    let n = m.dim();
    let inv_diag: Vec<f64> = m
        .diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, d)| a * d).collect() };

    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(SolveOutcome {
            x,
            relative_residual: 0.0,
            iterations: 0,
            method: "bicgstab",
        });
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < f64::MIN_POSITIVE {
            return Err(Error::Solver(format!(
                "BiCGSTAB breakdown (rho = 0) at iteration {it}"
            )));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = m.mul_vec(&p_hat);
        let denom = dot(&r_hat, &v);
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(Error::Solver(format!(
                "BiCGSTAB breakdown at iteration {it}"
            )));
        }
        alpha = rho / denom;
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm2(&s) / nb <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return finish(m, b, x, it);
        }
        let s_hat = precond(&s);
        let t = m.mul_vec(&s_hat);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::Solver(format!(
                "BiCGSTAB breakdown (t = 0) at iteration {it}"
            )));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / nb <= tol {
            return finish(m, b, x, it);
        }
        if omega == 0.0 {
            return Err(Error::Solver(format!(
                "BiCGSTAB stagnated at iteration {it}"
            )));
        }
    }
    Err(Error::Solver(format!(
        "BiCGSTAB did not reach relative residual {tol:e} in {max_iter} iterations"
    )))
}

fn finish(m: &CsrMatrix, b: &[f64], x: Vec<f64>, iterations: usize) -> Result<SolveOutcome> {
    let relative_residual = relative_residual(m, &x, b);
    Ok(SolveOutcome {
        x,
        relative_residual,
        iterations,
        method: "bicgstab",
    })
}
