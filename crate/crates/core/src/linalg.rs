//! Dense solvers shared by the spline and cubature code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Cholesky factorization of a symmetric positive definite matrix.
pub struct SpdSolver {
    chol: Cholesky<f64, Dyn>,
    matrix: DMatrix<f64>,
}

impl SpdSolver {
    /// Factorizes `a`; reports the smallest eigenvalue on failure.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        match Cholesky::new(a.clone()) {
            Some(chol) => Ok(SpdSolver { chol, matrix: a }),
            None => Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_eigenvalue(&a),
            }),
        }
    }

    /// Solves `A x = b` with one step of iterative refinement.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(b);
        let r = b - &self.matrix * &x;
        x += self.chol.solve(&r);
        x
    }

    /// `(max L_ii / min L_ii)^2`, a cheap lower estimate of the condition number.
    pub fn condition_estimate(&self) -> f64 {
        let l = self.chol.l_dirty();
        let d = l.diagonal();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        (hi / lo).powi(2)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone().symmetric_eigen().eigenvalues.min()
}

/// Minimum-norm solution of the underdetermined system `B d = v`
/// (`B` is `n x m` with `n <= m`) via a QR factorization of `B^T`.
///
/// Also returns `y` with `d = B^T y`, i.e. the solution of `B B^T y = v`.
pub fn min_norm_solve(b: &DMatrix<f64>, v: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let (n, m) = b.shape();
    if n > m {
        return Err(Error::InvalidParameter(format!(
            "min-norm solve needs at least as many unknowns ({m}) as equations ({n})"
        )));
    }
    let qr = b.transpose().qr();
    let r = qr.r();
    let q = qr.q();
    let rmax = r.diagonal().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let rmin = r.diagonal().iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if !(rmin > rmax * 1e-15) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: rmin * rmin,
        });
    }
    // B^T = Q R, so B B^T = R^T R; solve R^T z = v, then d = Q z, y = R^{-1} z
    let z = r
        .transpose()
        .solve_lower_triangular(v)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    let d = &q * &z;
    let y = r
        .solve_upper_triangular(&z)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    Ok((d, y))
}

/// Items per parallel chunk in [`ordered_sum`].
const SUM_CHUNK: usize = 32;

/// `Σ_x f(x)` of vectors of length `len`, parallel over fixed chunks and
/// combined in input order, so the rounding does not depend on thread count.
pub fn ordered_sum<T: Sync>(items: &[T], len: usize, f: impl Fn(&T, &mut [f64]) + Sync) -> Vec<f64> {
    let parts: Vec<Vec<f64>> = items
        .par_chunks(SUM_CHUNK)
        .map(|c| {
            let mut acc = vec![0.0; len];
            for x in c {
                f(x, &mut acc);
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; len];
    for p in &parts {
        for (a, b) in out.iter_mut().zip(p) {
            *a += b;
        }
    }
    out
}
