//! Nonnegative least squares by the Lawson-Hanson active-set method.
//!
//! The quadrature systems solved here are square or nearly square and
//! their unconstrained solutions are usually already nonnegative, so
//! the solver first tries a plain factorization of the full passive
//! set and only falls back to the active-set iteration when that
//! violates the bounds.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve_in_place, LstsqSolver, LuSolver};

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    /// Euclidean norm of A x - b at the solution.
    pub residual: f64,
}

fn residual_norm(p: usize, q: usize, a: &[f64], b: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p {
        let mut r = -b[i];
        let row = &a[i * q..(i + 1) * q];
        for (aij, xj) in row.iter().zip(x) {
            r += aij * xj;
        }
        s += r * r;
    }
    s.sqrt()
}

/// gradient of 1/2 ||Ax - b||^2, i.e. A^T (A x - b)
fn gradient(p: usize, q: usize, a: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; p];
    for i in 0..p {
        let mut s = -b[i];
        let row = &a[i * q..(i + 1) * q];
        for (aij, xj) in row.iter().zip(x) {
            s += aij * xj;
        }
        r[i] = s;
    }
    let mut g = vec![0.0; q];
    for i in 0..p {
        let ri = r[i];
        let row = &a[i * q..(i + 1) * q];
        for (gj, aij) in g.iter_mut().zip(row) {
            *gj += aij * ri;
        }
    }
    g
}

/// Unconstrained least-squares solve restricted to the passive columns.
/// Normal equations are fine here: the passive blocks stay small or
/// well-conditioned in the quadrature use cases, and degenerate pivots
/// fall back gracefully by dropping the newest column.
fn solve_passive(p: usize, q: usize, a: &[f64], b: &[f64], passive: &[usize]) -> Option<Vec<f64>> {
    let np = passive.len();
    if np == 0 {
        return Some(Vec::new());
    }
    let mut gram = vec![0.0; np * np];
    let mut rhs = vec![0.0; np];
    for (ci, &jci) in passive.iter().enumerate() {
        for (cj, &jcj) in passive.iter().enumerate().skip(ci) {
            let mut s = 0.0;
            for r in 0..p {
                s += a[r * q + jci] * a[r * q + jcj];
            }
            gram[ci * np + cj] = s;
            gram[cj * np + ci] = s;
        }
        let mut s = 0.0;
        for r in 0..p {
            s += a[r * q + jci] * b[r];
        }
        rhs[ci] = s;
    }
    cholesky_solve_in_place(np, &mut gram, &mut rhs)?;
    Some(rhs)
}

/// Minimize ||A x - b|| subject to x >= 0. `a` is row-major p×q.
///
/// KKT conditions hold at the reported solution within 1e-10 of the
/// gradient scale: passive components have zero gradient, active
/// components have nonnegative gradient.
pub fn nnls_solve(p: usize, q: usize, a: &[f64], b: &[f64]) -> Result<NnlsSolution> {
    assert_eq!(a.len(), p * q, "matrix buffer size mismatch");
    assert_eq!(b.len(), p, "rhs length mismatch");
    if p == 0 || q == 0 {
        return Err(Error::InvalidInput("empty system".into()));
    }

    // Fast path: solve the unconstrained problem; accept if feasible.
    if p == q || p > q {
        let x = if p == q {
            LuSolver::new(p, a).solve(b)
        } else {
            LstsqSolver::new(p, q, a).solve(b)
        };
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let feas_slack = 1e-12 * scale.max(1.0);
        if x.iter().all(|v| v.is_finite()) && x.iter().all(|&v| v >= -feas_slack) {
            let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
            let residual = residual_norm(p, q, a, b, &x);
            return Ok(NnlsSolution { x, residual });
        }
    }

    // Lawson-Hanson active-set loop from the empty passive set.
    let mut x = vec![0.0_f64; q];
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; q];
    let grad_scale = {
        let g0 = gradient(p, q, a, b, &x);
        g0.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0)
    };
    let tol = 1e-12 * grad_scale;

    let max_outer = 3 * q;
    let mut best_x = x.clone();
    let mut best_res = residual_norm(p, q, a, b, &x);

    for _outer in 0..max_outer {
        // most negative gradient among active (bound) variables
        let g = gradient(p, q, a, b, &x);
        let mut j_enter = None;
        let mut g_min = -tol;
        for j in 0..q {
            if !in_passive[j] && g[j] < g_min {
                g_min = g[j];
                j_enter = Some(j);
            }
        }
        let Some(j_enter) = j_enter else {
            let residual = residual_norm(p, q, a, b, &x);
            return Ok(NnlsSolution { x, residual });
        };
        passive.push(j_enter);
        in_passive[j_enter] = true;

        // inner loop: keep the passive solve feasible
        loop {
            let Some(z) = solve_passive(p, q, a, b, &passive) else {
                // dependent column: drop the newcomer and freeze it at 0
                let j = passive.pop().expect("passive set nonempty");
                in_passive[j] = false;
                break;
            };
            if z.iter().all(|&v| v > 0.0) {
                for (slot, &j) in z.iter().zip(&passive) {
                    x[j] = *slot;
                }
                break;
            }
            // step toward z until the first passive variable hits zero
            let mut alpha = 1.0_f64;
            for (zi, &j) in z.iter().zip(&passive) {
                if *zi <= 0.0 {
                    let denom = x[j] - zi;
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            for (zi, &j) in z.iter().zip(&passive) {
                x[j] += alpha * (zi - x[j]);
            }
            let mut retained = Vec::with_capacity(passive.len());
            for &j in &passive {
                if x[j] > 0.0 {
                    retained.push(j);
                } else {
                    x[j] = 0.0;
                    in_passive[j] = false;
                }
            }
            passive = retained;
        }

        let res = residual_norm(p, q, a, b, &x);
        if res < best_res {
            best_res = res;
            best_x = x.clone();
        }
    }

    Err(Error::NnlsNonConvergence { iterations: max_outer, residual: best_res, best: best_x })
}
