//! Real spherical harmonics, their surface-coordinate derivatives, and
//! harmonic interpolation of closed surfaces.
//!
//! Conventions: longitude λ ∈ (−π, π], latitude θ ∈ (−π/2, π/2], so the
//! Legendre argument is sin θ. The basis is the real orthonormal family
//!
//!   Y_ℓ^k = √2 · P̄_ℓ^k(sin θ) · cos(kλ)   (k > 0)
//!   Y_ℓ^0 =      P̄_ℓ^0(sin θ)
//!   Y_ℓ^k = √2 · P̄_ℓ^|k|(sin θ) · sin(|k|λ)  (k < 0)
//!
//! with P̄ the fully normalized associated Legendre function (no
//! Condon-Shortley phase). Columns are ordered (0,0), (1,0), (1,−1),
//! (1,1), (2,0), (2,−1), (2,1), (2,−2), (2,2), ...
//!
//! Everything is evaluated by normalized three-term recurrences, stable
//! far past ℓ = 120; the factorial ratios of the textbook normalization
//! never appear explicitly.

use crate::error::{Error, Result};
use crate::linalg::LuSolver;
use crate::points::SpherePointSet;
use crate::vec3::Vec3;
use std::f64::consts::SQRT_2;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// Latitudes closer to a pole than this refuse derivative evaluation.
pub const POLE_GUARD: f64 = 1e-8;

/// Number of basis functions through degree `m_deg`.
pub fn basis_size(m_deg: usize) -> usize {
    (m_deg + 1) * (m_deg + 1)
}

/// Column index of (ℓ, k) in the basis ordering.
pub fn basis_index(l: usize, k: isize) -> usize {
    debug_assert!(k.unsigned_abs() <= l);
    let base = l * l;
    if k == 0 {
        base
    } else if k < 0 {
        base + 2 * k.unsigned_abs() - 1
    } else {
        base + 2 * k as usize
    }
}

/// Inverse of [`basis_index`].
pub fn basis_degree_order(idx: usize) -> (usize, isize) {
    let l = (idx as f64).sqrt() as usize;
    let off = idx - l * l;
    if off == 0 {
        (l, 0)
    } else if off % 2 == 1 {
        (l, -(((off + 1) / 2) as isize))
    } else {
        (l, (off / 2) as isize)
    }
}

/// Value and surface-coordinate partials of one scalar basis function.
#[derive(Debug, Clone, Copy, Default)]
pub struct HarmonicJet {
    pub v: f64,
    pub dl: f64,
    pub dt: f64,
    pub dll: f64,
    pub dlt: f64,
    pub dtt: f64,
}

/// Position and partials of a surface map at one (λ, θ).
#[derive(Debug, Clone, Copy, Default)]
pub struct SurfaceJet {
    pub x: Vec3,
    pub xl: Vec3,
    pub xt: Vec3,
    pub xll: Vec3,
    pub xlt: Vec3,
    pub xtt: Vec3,
}

fn tri(l: usize, k: usize) -> usize {
    l * (l + 1) / 2 + k
}

/// Fully normalized P̄_ℓ^k(x) for all 0 ≤ k ≤ ℓ ≤ m_deg, triangular
/// storage indexed by `tri`. `x` = sin θ, `c` = cos θ ≥ 0.
fn legendre_table(m_deg: usize, x: f64, c: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), (m_deg + 1) * (m_deg + 2) / 2);
    // P̄_0^0 = 1/sqrt(4π)
    out[0] = 0.28209479177387814;
    // diagonal: P̄_k^k = c sqrt((2k+1)/(2k)) P̄_{k-1}^{k-1}
    for k in 1..=m_deg {
        let f = ((2 * k + 1) as f64 / (2 * k) as f64).sqrt();
        out[tri(k, k)] = c * f * out[tri(k - 1, k - 1)];
    }
    for k in 0..=m_deg {
        if k + 1 <= m_deg {
            // first off-diagonal: P̄_{k+1}^k = sqrt(2k+3) x P̄_k^k
            out[tri(k + 1, k)] = ((2 * k + 3) as f64).sqrt() * x * out[tri(k, k)];
        }
        for l in (k + 2)..=m_deg {
            let lf = l as f64;
            let kf = k as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - kf * kf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - kf * kf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            out[tri(l, k)] = a * (x * out[tri(l - 1, k)] - b * out[tri(l - 2, k)]);
        }
    }
}

/// d/dθ of P̄_ℓ^k(sin θ) from the degree-lowering identity. Divides by
/// cos θ; callers guard the poles.
fn legendre_dtheta(l: usize, k: usize, x: f64, c: f64, u: f64, u_lm1: f64) -> f64 {
    let lf = l as f64;
    let kf = k as f64;
    if l == k {
        -kf * x * u / c
    } else {
        let e = ((lf * lf - kf * kf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt();
        (e * u_lm1 - lf * x * u) / c
    }
}

/// d²/dθ² via the Laplace equation satisfied by the colatitude part:
/// u'' = tan θ u' + (k²/cos²θ − ℓ(ℓ+1)) u.
fn legendre_ddtheta(l: usize, k: usize, x: f64, c: f64, u: f64, du: f64) -> f64 {
    let kf = k as f64;
    (x / c) * du + (kf * kf / (c * c) - (l * (l + 1)) as f64) * u
}

/// One real harmonic value. Stable for ℓ well past 120.
pub fn eval_harmonic(l: usize, k: isize, lambda: f64, theta: f64) -> Result<f64> {
    if k.unsigned_abs() > l {
        return Err(Error::InvalidInput(format!("order |{k}| exceeds degree {l}")));
    }
    let ka = k.unsigned_abs();
    let (x, c) = (theta.sin(), theta.cos());
    // single column recurrence for order ka
    let mut diag = 0.28209479177387814;
    for j in 1..=ka {
        diag *= c * ((2 * j + 1) as f64 / (2 * j) as f64).sqrt();
    }
    let mut u = diag;
    if l > ka {
        let mut prev = diag;
        u = ((2 * ka + 3) as f64).sqrt() * x * diag;
        for ll in (ka + 2)..=l {
            let lf = ll as f64;
            let kf = ka as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - kf * kf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - kf * kf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = a * (x * u - b * prev);
            prev = u;
            u = next;
        }
    }
    Ok(match k.cmp(&0) {
        std::cmp::Ordering::Equal => u,
        std::cmp::Ordering::Greater => SQRT_2 * u * (k as f64 * lambda).cos(),
        std::cmp::Ordering::Less => SQRT_2 * u * (ka as f64 * lambda).sin(),
    })
}

fn check_pole(theta: f64) -> Result<()> {
    if theta.abs() > std::f64::consts::FRAC_PI_2 - POLE_GUARD {
        return Err(Error::PoleSingularity { theta_abs: theta.abs(), guard: POLE_GUARD });
    }
    Ok(())
}

/// One real harmonic with all first and second surface partials.
pub fn eval_harmonic_jet(l: usize, k: isize, lambda: f64, theta: f64) -> Result<HarmonicJet> {
    if k.unsigned_abs() > l {
        return Err(Error::InvalidInput(format!("order |{k}| exceeds degree {l}")));
    }
    check_pole(theta)?;
    let row = harmonic_jet_row(l, lambda, theta)?;
    Ok(row[basis_index(l, k)])
}

/// All basis values through degree `m_deg` at one node.
pub fn harmonic_value_row(m_deg: usize, lambda: f64, theta: f64) -> Vec<f64> {
    let (x, c) = (theta.sin(), theta.cos());
    let mut p = vec![0.0; (m_deg + 1) * (m_deg + 2) / 2];
    legendre_table(m_deg, x, c, &mut p);
    let mut out = vec![0.0; basis_size(m_deg)];
    for k in 0..=m_deg {
        let (sk, ck) = (k as f64 * lambda).sin_cos();
        for l in k..=m_deg {
            let u = p[tri(l, k)];
            if k == 0 {
                out[basis_index(l, 0)] = u;
            } else {
                out[basis_index(l, k as isize)] = SQRT_2 * u * ck;
                out[basis_index(l, -(k as isize))] = SQRT_2 * u * sk;
            }
        }
    }
    out
}

/// All basis jets through degree `m_deg` at one node. O((m_deg+1)²).
pub fn harmonic_jet_row(m_deg: usize, lambda: f64, theta: f64) -> Result<Vec<HarmonicJet>> {
    check_pole(theta)?;
    let (x, c) = (theta.sin(), theta.cos());
    let mut p = vec![0.0; (m_deg + 1) * (m_deg + 2) / 2];
    legendre_table(m_deg, x, c, &mut p);
    let mut out = vec![HarmonicJet::default(); basis_size(m_deg)];
    for k in 0..=m_deg {
        let kf = k as f64;
        let (sk, ck) = (kf * lambda).sin_cos();
        for l in k..=m_deg {
            let u = p[tri(l, k)];
            let u_lm1 = if l > k { p[tri(l - 1, k)] } else { 0.0 };
            let du = legendre_dtheta(l, k, x, c, u, u_lm1);
            let ddu = legendre_ddtheta(l, k, x, c, u, du);
            if k == 0 {
                out[basis_index(l, 0)] = HarmonicJet { v: u, dl: 0.0, dt: du, dll: 0.0, dlt: 0.0, dtt: ddu };
            } else {
                let r = SQRT_2;
                out[basis_index(l, k as isize)] = HarmonicJet {
                    v: r * u * ck,
                    dl: -kf * r * u * sk,
                    dt: r * du * ck,
                    dll: -kf * kf * r * u * ck,
                    dlt: -kf * r * du * sk,
                    dtt: r * ddu * ck,
                };
                out[basis_index(l, -(k as isize))] = HarmonicJet {
                    v: r * u * sk,
                    dl: kf * r * u * ck,
                    dt: r * du * sk,
                    dll: -kf * kf * r * u * sk,
                    dlt: kf * r * du * ck,
                    dtt: r * ddu * sk,
                };
            }
        }
    }
    Ok(out)
}

static BASIS_BUILDS: AtomicUsize = AtomicUsize::new(0);

/// How many times [`build_basis`] has run in this process. The
/// factorization is meant to be built once per run and shared.
pub fn basis_build_count() -> usize {
    BASIS_BUILDS.load(Ordering::Relaxed)
}

/// Square interpolation system on m = (M+1)² nodes with its cached LU
/// factorization.
pub struct HarmonicBasis {
    pub degree: usize,
    pub points: SpherePointSet,
    /// Row-major m×m; row i holds the basis values at node i.
    matrix: Vec<f64>,
    lu: LuSolver,
    cond: f64,
}

impl HarmonicBasis {
    pub fn m(&self) -> usize {
        basis_size(self.degree)
    }

    pub fn cond_estimate(&self) -> f64 {
        self.cond
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Solves (matrix) x = rhs, returning the solution together with the
    /// relative ∞-norm residual of the fit.
    pub fn fit_with_residual(&self, rhs: &[f64]) -> (Vec<f64>, f64) {
        let m = self.m();
        let x = self.lu.solve(rhs);
        let scale = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
        let mut worst = 0.0_f64;
        for i in 0..m {
            let mut r = -rhs[i];
            for j in 0..m {
                r += self.matrix[i * m + j] * x[j];
            }
            worst = worst.max(r.abs());
        }
        (x, worst / scale)
    }

    /// Residual-checked solve of (matrix) x = rhs.
    fn solve_checked(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (x, residual) = self.fit_with_residual(rhs);
        if residual > 1e-9 {
            return Err(Error::FitResidual { residual });
        }
        Ok(x)
    }
}

/// Assemble and factor the interpolation matrix for `points` at degree
/// `m_deg`. Requires a square system, n = (M+1)².
pub fn build_basis(points: &SpherePointSet, m_deg: usize) -> Result<HarmonicBasis> {
    let m = basis_size(m_deg);
    if points.n != m {
        return Err(Error::InvalidInput(format!(
            "degree {m_deg} needs exactly {m} nodes, point set has {}",
            points.n
        )));
    }
    let mut matrix = vec![0.0; m * m];
    for i in 0..m {
        let row = harmonic_value_row(m_deg, points.lambda[i], points.theta[i]);
        matrix[i * m..(i + 1) * m].copy_from_slice(&row);
    }
    let lu = LuSolver::new(m, &matrix);
    let cond = lu.cond_estimate();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::DegeneratePointSet { cond });
    }
    BASIS_BUILDS.fetch_add(1, Ordering::Relaxed);
    Ok(HarmonicBasis { degree: m_deg, points: points.clone(), matrix, lu, cond })
}

/// Coefficients of a scalar surface field fitted at the basis nodes.
pub fn fit_scalar_field(basis: &HarmonicBasis, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != basis.m() {
        return Err(Error::InvalidInput(format!(
            "expected {} samples, got {}",
            basis.m(),
            samples.len()
        )));
    }
    basis.solve_checked(samples)
}

/// Harmonic expansion of a scalar field, evaluable anywhere off the
/// poles together with its first surface partials.
#[derive(Debug, Clone)]
pub struct ScalarExpansion {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl ScalarExpansion {
    pub fn value(&self, lambda: f64, theta: f64) -> f64 {
        let row = harmonic_value_row(self.degree, lambda, theta);
        row.iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    /// (value, ∂λ, ∂θ).
    pub fn jet1(&self, lambda: f64, theta: f64) -> Result<(f64, f64, f64)> {
        let j = self.jet2(lambda, theta)?;
        Ok((j.v, j.dl, j.dt))
    }

    /// Full second-order jet of the expansion.
    pub fn jet2(&self, lambda: f64, theta: f64) -> Result<HarmonicJet> {
        let row = harmonic_jet_row(self.degree, lambda, theta)?;
        let mut out = HarmonicJet { v: 0.0, dl: 0.0, dt: 0.0, dll: 0.0, dlt: 0.0, dtt: 0.0 };
        for (j, c) in row.iter().zip(&self.coeffs) {
            out.v += j.v * c;
            out.dl += j.dl * c;
            out.dt += j.dt * c;
            out.dll += j.dll * c;
            out.dlt += j.dlt * c;
            out.dtt += j.dtt * c;
        }
        Ok(out)
    }
}

/// Harmonic surface interpolant: three scalar expansions sharing one
/// basis.
#[derive(Clone)]
pub struct ShellInterpolant {
    pub basis: Arc<HarmonicBasis>,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    pub cz: Vec<f64>,
}

/// Fit the component maps through the given node positions using the
/// cached factorization (three O(m²) solves).
pub fn fit_interpolant(basis: &Arc<HarmonicBasis>, positions: &[Vec3]) -> Result<ShellInterpolant> {
    let m = basis.m();
    if positions.len() != m {
        return Err(Error::InvalidInput(format!(
            "expected {m} positions, got {}",
            positions.len()
        )));
    }
    let bx: Vec<f64> = positions.iter().map(|p| p.x).collect();
    let by: Vec<f64> = positions.iter().map(|p| p.y).collect();
    let bz: Vec<f64> = positions.iter().map(|p| p.z).collect();
    Ok(ShellInterpolant {
        basis: Arc::clone(basis),
        cx: basis.solve_checked(&bx)?,
        cy: basis.solve_checked(&by)?,
        cz: basis.solve_checked(&bz)?,
    })
}

impl ShellInterpolant {
    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Position only; valid at poles too (no derivatives involved).
    pub fn position(&self, lambda: f64, theta: f64) -> Vec3 {
        let row = harmonic_value_row(self.basis.degree, lambda, theta);
        let mut p = Vec3::default();
        for (i, y) in row.iter().enumerate() {
            p += Vec3::new(self.cx[i], self.cy[i], self.cz[i]) * *y;
        }
        p
    }

    /// Full second-order jet of the surface map.
    pub fn jet(&self, lambda: f64, theta: f64) -> Result<SurfaceJet> {
        let row = harmonic_jet_row(self.basis.degree, lambda, theta)?;
        let mut out = SurfaceJet::default();
        for (i, j) in row.iter().enumerate() {
            let c = Vec3::new(self.cx[i], self.cy[i], self.cz[i]);
            out.x += c * j.v;
            out.xl += c * j.dl;
            out.xt += c * j.dt;
            out.xll += c * j.dll;
            out.xlt += c * j.dlt;
            out.xtt += c * j.dtt;
        }
        Ok(out)
    }

    /// Jets at a whole node list.
    pub fn jets(&self, lambda: &[f64], theta: &[f64]) -> Result<Vec<SurfaceJet>> {
        lambda
            .iter()
            .zip(theta)
            .map(|(&l, &t)| self.jet(l, t))
            .collect()
    }
}
