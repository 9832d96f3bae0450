//! Small dense linear algebra, Newton's method and central-difference
//! Jacobians.
//!
//! Every problem in this crate has at most a few dozen unknowns, so all
//! matrices are dense and all solves are LU with partial pivoting.

use crate::error::{Error, Result};

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

/// Builds a vector, rejecting NaN and infinite entries.
pub fn vector(entries: &[f64]) -> Result<Vector> {
    if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite vector entry {bad}")));
    }
    Ok(Vector::from_column_slice(entries))
}

/// Builds a row-major matrix, rejecting NaN and infinite entries.
pub fn matrix(rows: usize, cols: usize, row_major: &[f64]) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
    }
    if row_major.len() != rows * cols {
        return Err(Error::DimensionMismatch { expected: rows * cols, got: row_major.len() });
    }
    if row_major.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    Ok(Matrix::from_row_slice(rows, cols, row_major))
}

pub fn inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn mat_inf_norm(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Concatenates vectors end to end.
pub fn concat(parts: &[&Vector]) -> Vector {
    let n = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(n);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(p);
        at += p.len();
    }
    out
}

/// Splits `v` into consecutive blocks of the given lengths.
pub fn split(v: &Vector, lens: &[usize]) -> Vec<Vector> {
    let mut at = 0;
    lens.iter()
        .map(|&len| {
            let part = v.rows(at, len).into_owned();
            at += len;
            part
        })
        .collect()
}

/// Solves `a x = b`; fails on a singular or numerically useless factorization.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if a.nrows() != a.ncols() {
        return Err(Error::SingularJacobian(format!("non-square {}x{} system", a.nrows(), a.ncols())));
    }
    let lu = a.clone().lu();
    let pivots = lu.u().diagonal().abs();
    let (smallest, largest) = (pivots.min(), pivots.max());
    if !(smallest > 1e-13 * largest) {
        return Err(Error::SingularJacobian(format!("pivot ratio {:.3e} in LU factorization", smallest / largest)));
    }
    let x = lu.solve(b).ok_or_else(|| Error::SingularJacobian("zero pivot in LU factorization".into()))?;
    if !is_finite(&x) {
        return Err(Error::SingularJacobian("non-finite solution".into()));
    }
    Ok(x)
}

/// Default central-difference step: `1e-5 * max(1, |x|_inf)`.
pub fn default_fd_step(x: &Vector) -> f64 {
    1e-5 * inf_norm(x).max(1.0)
}

/// Central-difference Jacobian of `f` at `x`.
///
/// Entry `(i, j)` is `(f_i(x + eps e_j) - f_i(x - eps e_j)) / (2 eps)`.
pub fn jacobian_fd<F>(f: F, x: &Vector, eps: f64) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {eps}")));
    }
    let probe = |x: &Vector| {
        f(x).map_err(|e| Error::EvaluationFailure(e.to_string())).and_then(|y| {
            if is_finite(&y) {
                Ok(y)
            } else {
                Err(Error::EvaluationFailure("non-finite value at probe point".into()))
            }
        })
    };
    let n = x.len();
    let mut columns: Vec<Vector> = Vec::with_capacity(n);
    for j in 0..n {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += eps;
        minus[j] -= eps;
        let fp = probe(&plus)?;
        let fm = probe(&minus)?;
        if fp.len() != fm.len() {
            return Err(Error::EvaluationFailure("output dimension changed between probes".into()));
        }
        columns.push((fp - fm) / (2.0 * eps));
    }
    let m = columns.first().map_or(0, |c| c.len());
    Ok(Matrix::from_fn(m, n, |i, j| columns[j][i]))
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// Absolute tolerance on the infinity norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Halve the step until the residual decreases (and evaluates at all).
    pub backtracking: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 50, backtracking: false }
    }
}

/// Outcome of a Newton run. `x` is the best iterate even when not converged.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub x: Vector,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

pub type JacobianFn<'a> = &'a dyn Fn(&Vector) -> Result<Matrix>;

/// Newton iteration that always reports its final state.
///
/// Without `jacobian` a central-difference Jacobian with
/// [`default_fd_step`] is used.
pub fn newton<F>(residual: F, jacobian: Option<JacobianFn<'_>>, x0: &Vector, opts: &NewtonOptions) -> Result<NewtonReport>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {}", opts.tol)));
    }
    let mut x = x0.clone();
    let mut r = residual(&x)?;
    if r.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: r.len() });
    }
    if !is_finite(&r) {
        return Err(Error::EvaluationFailure("non-finite residual at initial guess".into()));
    }
    let mut norm = inf_norm(&r);
    let mut iterations = 0;
    loop {
        if norm <= opts.tol {
            return Ok(NewtonReport { x, iterations, residual_norm: norm, converged: true });
        }
        if iterations >= opts.max_iter {
            return Ok(NewtonReport { x, iterations, residual_norm: norm, converged: false });
        }
        let jac = match jacobian {
            Some(j) => j(&x)?,
            None => jacobian_fd(&residual, &x, default_fd_step(&x))?,
        };
        let dx = solve(&jac, &(-&r))?;
        iterations += 1;

        if !opts.backtracking {
            x += dx;
            r = residual(&x)?;
            if !is_finite(&r) {
                return Err(Error::EvaluationFailure(format!("non-finite residual at iteration {iterations}")));
            }
            norm = inf_norm(&r);
            continue;
        }

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = &x + &dx * lambda;
            if let Ok(rt) = residual(&trial) {
                let nt = inf_norm(&rt);
                if nt.is_finite() && nt <= (1.0 - 1e-4 * lambda) * norm {
                    accepted = Some((trial, rt, nt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, rt, nt)) => {
                x = xt;
                r = rt;
                norm = nt;
            }
            None => return Ok(NewtonReport { x, iterations, residual_norm: norm, converged: false }),
        }
    }
}

/// Newton's method returning the root or [`Error::NonConvergence`].
pub fn newton_solve<F>(residual: F, jacobian: Option<JacobianFn<'_>>, x0: &Vector, tol: f64, max_iter: usize) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let opts = NewtonOptions { tol, max_iter, backtracking: false };
    let report = newton(residual, jacobian, x0, &opts)?;
    if report.converged {
        Ok(report.x)
    } else {
        Err(Error::NonConvergence { iterations: report.iterations, residual_norm: report.residual_norm })
    }
}
