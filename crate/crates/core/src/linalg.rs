//! Thin wrappers over dense factorizations.
//!
//! The rest of the crate talks to this module instead of calling faer
//! directly, so the factorization backend stays swappable and the
//! condition-estimation policy lives in one place.

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::Mat;

/// Cached LU factorization of a square matrix plus its 1-norm,
/// enough to solve systems and estimate the condition number.
pub struct LuSolver {
    n: usize,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
    norm1: f64,
}

impl LuSolver {
    /// Factor `a` (row-major, n*n entries).
    pub fn new(n: usize, a: &[f64]) -> Self {
        assert_eq!(a.len(), n * n, "matrix buffer size mismatch");
        let m = Mat::from_fn(n, n, |i, j| a[i * n + j]);
        let mut norm1 = 0.0_f64;
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += a[i * n + j].abs();
            }
            norm1 = norm1.max(s);
        }
        let lu = m.partial_piv_lu();
        LuSolver { n, lu, norm1 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// ln |det A| from the U diagonal; -inf for a singular matrix.
    pub fn log_abs_det(&self) -> f64 {
        let u = self.lu.U();
        (0..self.n).map(|i| u[(i, i)].abs().ln()).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve_transpose(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solve for several right-hand sides given as columns.
    pub fn solve_many(&self, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let rhs = Mat::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
        let x = self.lu.solve(&rhs);
        (0..cols.len())
            .map(|j| (0..self.n).map(|i| x[(i, j)]).collect())
            .collect()
    }

    /// Hager-style 1-norm condition estimate using a handful of
    /// solves with the cached factorization. An estimate is all the
    /// degeneracy check needs; it is within a small factor of the true
    /// kappa_1 in practice.
    pub fn cond_estimate(&self) -> f64 {
        let n = self.n;
        if n == 1 {
            let x = self.solve(&[1.0]);
            return (self.norm1 * x[0].abs()).abs();
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0_f64;
        for _ in 0..5 {
            let y = self.solve(&x);
            let y_norm1: f64 = y.iter().map(|v| v.abs()).sum();
            est = est.max(y_norm1);
            let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve_transpose(&xi);
            let (mut j_best, mut z_best) = (0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if zj.abs() > z_best {
                    z_best = zj.abs();
                    j_best = j;
                }
            }
            let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if z_best <= zx.abs() {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j_best] = 1.0;
        }
        self.norm1 * est
    }
}

/// Cached QR factorization for least-squares projections
/// (rows >= cols).
pub struct LstsqSolver {
    rows: usize,
    cols: usize,
    qr: faer::linalg::solvers::Qr<f64>,
}

impl LstsqSolver {
    /// Factor `a` (row-major, rows*cols entries).
    pub fn new(rows: usize, cols: usize, a: &[f64]) -> Self {
        assert_eq!(a.len(), rows * cols, "matrix buffer size mismatch");
        assert!(rows >= cols, "least-squares solver expects a tall system");
        let m = Mat::from_fn(rows, cols, |i, j| a[i * cols + j]);
        LstsqSolver { rows, cols, qr: m.qr() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Minimizer of ||A x - b||_2.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows);
        let rhs = Mat::from_fn(self.rows, 1, |i, _| b[i]);
        let x = self.qr.solve_lstsq(&rhs);
        (0..self.cols).map(|i| x[(i, 0)]).collect()
    }
}

/// Solve the symmetric positive definite system `a x = b` in place via
/// an unblocked Cholesky factorization. `a` is row-major q*q scratch
/// that gets overwritten. Returns None when a pivot collapses, which
/// the active-set solver treats as a dependent column.
pub fn cholesky_solve_in_place(q: usize, a: &mut [f64], b: &mut [f64]) -> Option<()> {
    assert_eq!(a.len(), q * q);
    assert_eq!(b.len(), q);
    // factor: a = L L^T, L stored in the lower triangle
    for j in 0..q {
        let mut d = a[j * q + j];
        for k in 0..j {
            d -= a[j * q + k] * a[j * q + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * q + j] = d;
        for i in (j + 1)..q {
            let mut s = a[i * q + j];
            for k in 0..j {
                s -= a[i * q + k] * a[j * q + k];
            }
            a[i * q + j] = s / d;
        }
    }
    // forward substitution
    for i in 0..q {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * q + k] * b[k];
        }
        b[i] = s / a[i * q + i];
    }
    // back substitution
    for i in (0..q).rev() {
        let mut s = b[i];
        for k in (i + 1)..q {
            s -= a[k * q + i] * b[k];
        }
        b[i] = s / a[i * q + i];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_estimates_condition() {
        // diag(1, 1e-6) has kappa_1 = 1e6 exactly
        let a = vec![1.0, 0.0, 0.0, 1e-6];
        let lu = LuSolver::new(2, &a);
        let x = lu.solve(&[2.0, 3e-6]);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-9);
        let c = lu.cond_estimate();
        assert!(c > 0.5e6 && c < 2e6, "cond estimate {c} far from 1e6");
    }

    #[test]
    fn lstsq_recovers_plane() {
        // overdetermined fit of z = 1 + 2x - y on 5 samples
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, -1.0)];
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y) in pts {
            a.extend_from_slice(&[1.0, x, y]);
            b.push(1.0 + 2.0 * x - y);
        }
        let qr = LstsqSolver::new(5, 3, &a);
        let c = qr.solve(&b);
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!((c[1] - 2.0).abs() < 1e-12);
        assert!((c[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_solves_spd() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![10.0, 9.0];
        cholesky_solve_in_place(2, &mut a, &mut b).unwrap();
        // exact solution of [[4,2],[2,3]] x = [10,9]
        assert!((b[0] - 1.5).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
    }
}
