//! Periodic spectral Stokes solver and the regularized-delta coupling
//! layer between Lagrangian shell nodes and the Eulerian grid.
//!
//! The domain is [−L, L]³ with node-centered collocated points x_i =
//! −L + i·h. Velocities solve μΔu − ∇p + f = 0, ∇·u = 0 by per-mode
//! projection in Fourier space with the zero-mean gauge û₀ = 0;
//! solvability of the periodic problem requires the forcing to have no
//! net component, which is checked before every solve.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Uniform periodic grid over [−L, L]³.
#[derive(Debug, Clone, Copy)]
pub struct EulerianGrid {
    /// Half-width of the cubic domain.
    pub l: f64,
    /// Points per axis; the spacing is 2L/eta.
    pub eta: usize,
    /// Dynamic viscosity.
    pub mu: f64,
}

impl EulerianGrid {
    pub fn new(l: f64, eta: usize, mu: f64) -> Result<Self> {
        if !(l > 0.0) || !(mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid needs positive half-width and viscosity, got L = {l}, mu = {mu}"
            )));
        }
        if eta < 8 || eta % 2 != 0 {
            return Err(Error::InvalidInput(format!("eta = {eta} must be even and at least 8")));
        }
        Ok(EulerianGrid { l, eta, mu })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.eta as f64
    }

    pub fn cells(&self) -> usize {
        self.eta * self.eta * self.eta
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.eta * (j + self.eta * k)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.h();
        Vec3::new(
            -self.l + i as f64 * h,
            -self.l + j as f64 * h,
            -self.l + k as f64 * h,
        )
    }
}

/// Eulerian unknowns of one Stokes solve.
#[derive(Debug, Clone)]
pub struct FluidState {
    pub u: [Vec<f64>; 3],
    pub p: Vec<f64>,
    pub f: [Vec<f64>; 3],
}

impl FluidState {
    pub fn zeros(grid: &EulerianGrid) -> Self {
        let z = vec![0.0; grid.cells()];
        FluidState { u: [z.clone(), z.clone(), z.clone()], p: z.clone(), f: [z.clone(), z.clone(), z] }
    }
}

/// The standard 4-point immersed-boundary kernel on grid-normalized
/// offsets; support |r| < 2, even, partition of unity over the integers.
pub fn delta4(r: f64) -> f64 {
    let a = r.abs();
    if a < 1.0 {
        0.125 * (3.0 - 2.0 * a + (1.0 + 4.0 * a - 4.0 * a * a).sqrt())
    } else if a < 2.0 {
        0.125 * (5.0 - 2.0 * a - (-7.0 + 12.0 * a - 4.0 * a * a).sqrt())
    } else {
        0.0
    }
}

/// Kernel stencil along one axis: base grid index and 4 weights for a
/// point at grid coordinate s (units of h, node 0 at −L).
fn stencil(s: f64, eta: usize) -> ([usize; 4], [f64; 4]) {
    let base = s.floor() as i64 - 1;
    let mut idx = [0usize; 4];
    let mut w = [0.0; 4];
    let m = eta as i64;
    for t in 0..4 {
        let g = base + t as i64;
        idx[t as usize] = g.rem_euclid(m) as usize;
        w[t as usize] = delta4(s - g as f64);
    }
    (idx, w)
}

/// Spreads point forces to a grid force density: f(x) = Σ F_i δ_h(x −
/// X_i) with δ_h the tensor-product 4-point kernel over h³. Positions
/// are wrapped into the periodic box. The discrete integral Σ f h³
/// reproduces Σ F_i to rounding because the kernel sums to one.
pub fn spread(
    forces: &[Vec3],
    positions: &[Vec3],
    grid: &EulerianGrid,
) -> Result<[Vec<f64>; 3]> {
    if forces.len() != positions.len() {
        return Err(Error::InvalidInput(format!(
            "{} forces for {} positions",
            forces.len(),
            positions.len()
        )));
    }
    let h = grid.h();
    let inv_h3 = 1.0 / (h * h * h);
    let zero = vec![0.0; grid.cells()];
    let mut field = [zero.clone(), zero.clone(), zero];
    for (q, (fq, xq)) in forces.iter().zip(positions).enumerate() {
        if !(fq.x.is_finite() && fq.y.is_finite() && fq.z.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite force at node {q}")));
        }
        if !(xq.x.is_finite() && xq.y.is_finite() && xq.z.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite position at node {q}")));
        }
        let span = 2.0 * grid.l;
        let sx = (xq.x + grid.l).rem_euclid(span) / h;
        let sy = (xq.y + grid.l).rem_euclid(span) / h;
        let sz = (xq.z + grid.l).rem_euclid(span) / h;
        let (ix, wx) = stencil(sx, grid.eta);
        let (iy, wy) = stencil(sy, grid.eta);
        let (iz, wz) = stencil(sz, grid.eta);
        for c in 0..4 {
            for b in 0..4 {
                let wcb = wz[c] * wy[b];
                if wcb == 0.0 {
                    continue;
                }
                for a in 0..4 {
                    let w = wcb * wx[a] * inv_h3;
                    if w == 0.0 {
                        continue;
                    }
                    let id = grid.index(ix[a], iy[b], iz[c]);
                    field[0][id] += fq.x * w;
                    field[1][id] += fq.y * w;
                    field[2][id] += fq.z * w;
                }
            }
        }
    }
    Ok(field)
}

/// Adjoint of `spread`: U_i = Σ_grid u(x) δ_h(x − X_i) h³. With the h³
/// volume factor the pair satisfies ⟨spread(F), u⟩ h³ = Σ F_i · U_i.
pub fn interpolate(u: &[Vec<f64>; 3], positions: &[Vec3], grid: &EulerianGrid) -> Vec<Vec3> {
    let h = grid.h();
    let span = 2.0 * grid.l;
    let mut out = Vec::with_capacity(positions.len());
    for xq in positions {
        let sx = (xq.x + grid.l).rem_euclid(span) / h;
        let sy = (xq.y + grid.l).rem_euclid(span) / h;
        let sz = (xq.z + grid.l).rem_euclid(span) / h;
        let (ix, wx) = stencil(sx, grid.eta);
        let (iy, wy) = stencil(sy, grid.eta);
        let (iz, wz) = stencil(sz, grid.eta);
        let mut v = Vec3::zero();
        for c in 0..4 {
            for b in 0..4 {
                let wcb = wz[c] * wy[b];
                if wcb == 0.0 {
                    continue;
                }
                for a in 0..4 {
                    let w = wcb * wx[a];
                    if w == 0.0 {
                        continue;
                    }
                    let id = grid.index(ix[a], iy[b], iz[c]);
                    v.x += u[0][id] * w;
                    v.y += u[1][id] * w;
                    v.z += u[2][id] * w;
                }
            }
        }
        out.push(v);
    }
    out
}

/// In-place complex FFT along one axis of the eta³ cube.
fn fft_axis(data: &mut [Complex<f64>], eta: usize, axis: usize, fft: &Arc<dyn Fft<f64>>) {
    match axis {
        0 => fft.process(data),
        1 => {
            let mut line = vec![Complex::new(0.0, 0.0); eta];
            for k in 0..eta {
                for i in 0..eta {
                    for j in 0..eta {
                        line[j] = data[i + eta * (j + eta * k)];
                    }
                    fft.process(&mut line);
                    for j in 0..eta {
                        data[i + eta * (j + eta * k)] = line[j];
                    }
                }
            }
        }
        _ => {
            let mut line = vec![Complex::new(0.0, 0.0); eta];
            for j in 0..eta {
                for i in 0..eta {
                    for k in 0..eta {
                        line[k] = data[i + eta * (j + eta * k)];
                    }
                    fft.process(&mut line);
                    for k in 0..eta {
                        data[i + eta * (j + eta * k)] = line[k];
                    }
                }
            }
        }
    }
}

fn fft3(data: &mut [Complex<f64>], eta: usize, fft: &Arc<dyn Fft<f64>>) {
    for axis in 0..3 {
        fft_axis(data, eta, axis, fft);
    }
}

/// Signed integer mode for transform index m on an even grid. The
/// Nyquist index maps to +eta/2; the solver zeroes those planes, so the
/// sign choice only affects diagnostics.
fn signed_mode(m: usize, eta: usize) -> i64 {
    if m <= eta / 2 {
        m as i64
    } else {
        m as i64 - eta as i64
    }
}

/// Solves periodic Stokes flow μΔu = ∇p − f for the given force
/// density. Per nonzero mode û = (I − k̂k̂ᵀ)f̂/(μ|k|²) and p̂ = −i k·f̂/|k|²;
/// both zero modes are gauged to zero. Fails if the net force violates
/// the periodic solvability constraint.
///
/// Modes with any index on a Nyquist plane are annihilated: a real
/// collocated grid stores only the cosine half of such a mode, the
/// projector is not even per component, and carrying them through
/// breaks the conjugate symmetry of real fields and with it the
/// divergence-free property of the returned velocity.
pub fn stokes_solve(f: &[Vec<f64>; 3], grid: &EulerianGrid) -> Result<([Vec<f64>; 3], Vec<f64>)> {
    let cells = grid.cells();
    for comp in f {
        if comp.len() != cells {
            return Err(Error::InvalidInput(format!(
                "force field has {} entries, grid has {cells}",
                comp.len()
            )));
        }
    }
    let h3 = grid.h().powi(3);
    let tol = 1e-8;
    let mut scale = 0.0_f64;
    let mut net = 0.0_f64;
    for comp in f {
        let total: f64 = comp.iter().sum();
        let magnitude: f64 = comp.iter().map(|v| v.abs()).sum();
        net = net.max((total * h3).abs());
        scale = scale.max(magnitude * h3);
    }
    // Mixed tolerance: relative to the gross force so large problems
    // are judged proportionally, with an absolute floor so a shell at
    // equilibrium (whole field at roundoff level, cancellation
    // incomplete by construction) is not rejected as unbalanced.
    if net > tol * (1.0 + scale) {
        return Err(Error::NetForce { net, tol, scale });
    }

    let eta = grid.eta;
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(eta);
    let inverse = planner.plan_fft_inverse(eta);

    let mut fhat: Vec<Vec<Complex<f64>>> = f
        .iter()
        .map(|comp| {
            let mut buf: Vec<Complex<f64>> =
                comp.iter().map(|v| Complex::new(*v, 0.0)).collect();
            fft3(&mut buf, eta, &forward);
            buf
        })
        .collect();

    let mut phat = vec![Complex::new(0.0, 0.0); cells];
    let base = PI / grid.l;
    let nyquist = eta / 2;
    for mk in 0..eta {
        let kz = base * signed_mode(mk, eta) as f64;
        for mj in 0..eta {
            let ky = base * signed_mode(mj, eta) as f64;
            for mi in 0..eta {
                let kx = base * signed_mode(mi, eta) as f64;
                let id = grid.index(mi, mj, mk);
                let k2 = kx * kx + ky * ky + kz * kz;
                if k2 == 0.0 || mi == nyquist || mj == nyquist || mk == nyquist {
                    fhat[0][id] = Complex::new(0.0, 0.0);
                    fhat[1][id] = Complex::new(0.0, 0.0);
                    fhat[2][id] = Complex::new(0.0, 0.0);
                    continue;
                }
                let fx = fhat[0][id];
                let fy = fhat[1][id];
                let fz = fhat[2][id];
                let kdotf = fx * kx + fy * ky + fz * kz;
                let s = kdotf / k2;
                let m2 = grid.mu * k2;
                fhat[0][id] = (fx - s * kx) / m2;
                fhat[1][id] = (fy - s * ky) / m2;
                fhat[2][id] = (fz - s * kz) / m2;
                phat[id] = Complex::new(0.0, -1.0) * s;
            }
        }
    }

    let norm = 1.0 / cells as f64;
    let mut u: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (axis, buf) in fhat.iter_mut().enumerate() {
        fft3(buf, eta, &inverse);
        u[axis] = buf.iter().map(|c| c.re * norm).collect();
    }
    fft3(&mut phat, eta, &inverse);
    let p = phat.iter().map(|c| c.re * norm).collect();
    Ok((u, p))
}

/// Max spectral divergence |k·û| over modes; diagnostic for tests and
/// snapshot sanity checks.
pub fn max_spectral_divergence(u: &[Vec<f64>; 3], grid: &EulerianGrid) -> f64 {
    let eta = grid.eta;
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(eta);
    let uhat: Vec<Vec<Complex<f64>>> = u
        .iter()
        .map(|comp| {
            let mut buf: Vec<Complex<f64>> =
                comp.iter().map(|v| Complex::new(*v, 0.0)).collect();
            fft3(&mut buf, eta, &forward);
            buf
        })
        .collect();
    let base = PI / grid.l;
    let norm = 1.0 / grid.cells() as f64;
    let mut worst = 0.0_f64;
    for mk in 0..eta {
        let kz = base * signed_mode(mk, eta) as f64;
        for mj in 0..eta {
            let ky = base * signed_mode(mj, eta) as f64;
            for mi in 0..eta {
                let kx = base * signed_mode(mi, eta) as f64;
                let id = grid.index(mi, mj, mk);
                let div = uhat[0][id] * kx + uhat[1][id] * ky + uhat[2][id] * kz;
                worst = worst.max(div.norm() * norm);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn grid8() -> EulerianGrid {
        EulerianGrid::new(1.0, 8, 1.0).unwrap()
    }

    #[test]
    fn grid_shape_is_validated() {
        assert!(EulerianGrid::new(1.0, 7, 1.0).is_err());
        assert!(EulerianGrid::new(1.0, 6, 1.0).is_err());
        assert!(EulerianGrid::new(0.0, 8, 1.0).is_err());
        assert!(EulerianGrid::new(1.0, 8, 0.0).is_err());
        let g = EulerianGrid::new(2.0, 16, 1.2).unwrap();
        assert_relative_eq!(g.h(), 0.25, max_relative = 1e-16);
    }

    #[test]
    fn kernel_values_and_support() {
        assert_relative_eq!(delta4(0.0), 0.5, max_relative = 1e-15);
        assert_relative_eq!(delta4(1.0), 0.25, max_relative = 1e-15);
        assert_relative_eq!(delta4(-1.0), 0.25, max_relative = 1e-15);
        assert_eq!(delta4(2.0), 0.0);
        assert_eq!(delta4(-2.5), 0.0);
    }

    /// Partition of unity and vanishing first moment over integer
    /// shifts; the latter makes linear fields interpolate exactly.
    #[test]
    fn kernel_moment_identities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(-3.0..3.0);
            let mut sum = 0.0;
            let mut first = 0.0;
            for j in -5..=5 {
                let w = delta4(r - j as f64);
                sum += w;
                first += (r - j as f64) * w;
            }
            assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
            assert_relative_eq!(first, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn spread_conserves_momentum() {
        let grid = grid8();
        let h3 = grid.h().powi(3);
        // On-node force: the kernel concentrates on 3 points per axis.
        let pos = vec![grid.node(2, 3, 4)];
        let f = vec![Vec3::new(1.0, 0.0, 0.0)];
        let field = spread(&f, &pos, &grid).unwrap();
        let total: f64 = field[0].iter().sum::<f64>() * h3;
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        let center = field[0][grid.index(2, 3, 4)];
        assert_relative_eq!(center, 0.125 / h3, max_relative = 1e-13);
        assert_eq!(field[0].iter().filter(|v| **v != 0.0).count(), 27);

        // Off-node general position.
        let pos = vec![Vec3::new(0.13, -0.41, 0.77)];
        let f = vec![Vec3::new(0.3, -1.2, 2.2)];
        let field = spread(&f, &pos, &grid).unwrap();
        for axis in 0..3 {
            let total: f64 = field[axis].iter().sum::<f64>() * h3;
            let want = [0.3, -1.2, 2.2][axis];
            assert_relative_eq!(total, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn corner_force_wraps_to_all_octants() {
        let grid = grid8();
        let pos = vec![Vec3::new(-1.0, -1.0, -1.0)];
        let f = vec![Vec3::new(1.0, 0.0, 0.0)];
        let field = spread(&f, &pos, &grid).unwrap();
        let e = grid.eta;
        // 27 nonzero nodes at indices {eta-1, 0, 1} per axis: all eight
        // corner octants receive weight.
        assert_eq!(field[0].iter().filter(|v| **v != 0.0).count(), 27);
        for (i, j, k) in [(1usize, 1usize, 1usize), (e - 1, e - 1, e - 1), (1, e - 1, 1)] {
            assert!(field[0][grid.index(i, j, k)] != 0.0);
        }
        let total: f64 = field[0].iter().sum::<f64>() * grid.h().powi(3);
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_sum_forces_spread_to_zero_integral() {
        let grid = grid8();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let mut forces: Vec<Vec3> = (0..n - 1)
            .map(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        let balance = forces.iter().fold(Vec3::zero(), |a, v| a + *v);
        forces.push(Vec3::zero() - balance);
        let positions: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        let field = spread(&forces, &positions, &grid).unwrap();
        let h3 = grid.h().powi(3);
        for axis in 0..3 {
            let total: f64 = field[axis].iter().sum::<f64>() * h3;
            assert!(total.abs() < 1e-12, "axis {axis} net {total}");
        }
        assert!(spread(&[Vec3::new(f64::NAN, 0.0, 0.0)], &positions[..1], &grid).is_err());
    }

    #[test]
    fn constant_field_interpolates_exactly() {
        let grid = grid8();
        let u0 = Vec3::new(0.7, -0.2, 1.9);
        let cells = grid.cells();
        let u = [vec![u0.x; cells], vec![u0.y; cells], vec![u0.z; cells]];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let positions: Vec<Vec3> = (0..25)
            .map(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        for v in interpolate(&u, &positions, &grid) {
            assert_relative_eq!(v.x, u0.x, epsilon = 1e-13);
            assert_relative_eq!(v.y, u0.y, epsilon = 1e-13);
            assert_relative_eq!(v.z, u0.z, epsilon = 1e-13);
        }
    }

    /// The kernel's vanishing first moment reproduces linear fields
    /// exactly at grid nodes away from the periodic seam.
    #[test]
    fn linear_field_is_exact_at_interior_nodes() {
        let grid = grid8();
        let cells = grid.cells();
        let mut u = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
        for k in 0..grid.eta {
            for j in 0..grid.eta {
                for i in 0..grid.eta {
                    u[0][grid.index(i, j, k)] = grid.node(i, j, k).z;
                }
            }
        }
        let x = grid.node(3, 4, 4);
        let v = interpolate(&u, &[x], &grid);
        assert_relative_eq!(v[0].x, x.z, epsilon = 1e-14);
    }

    #[test]
    fn spread_and_interpolate_are_adjoint() {
        let grid = grid8();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let n = 17;
        let forces: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        let positions: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        let cells = grid.cells();
        let mut u = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
        for axis in 0..3 {
            for v in u[axis].iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let field = spread(&forces, &positions, &grid).unwrap();
        let h3 = grid.h().powi(3);
        let lhs: f64 = (0..3)
            .map(|a| field[a].iter().zip(&u[a]).map(|(x, y)| x * y).sum::<f64>() * h3)
            .sum();
        let vel = interpolate(&u, &positions, &grid);
        let rhs: f64 = forces.iter().zip(&vel).map(|(f, v)| f.dot(*v)).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn single_mode_forcing_has_analytic_solution() {
        let grid = EulerianGrid::new(1.5, 16, 2.3).unwrap();
        let cells = grid.cells();
        let k = PI / grid.l;
        let f0 = 0.8;
        let mut f = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
        for kk in 0..grid.eta {
            for j in 0..grid.eta {
                for i in 0..grid.eta {
                    f[0][grid.index(i, j, kk)] = f0 * (k * grid.node(i, j, kk).z).sin();
                }
            }
        }
        let (u, p) = stokes_solve(&f, &grid).unwrap();
        for kk in 0..grid.eta {
            for j in 0..grid.eta {
                for i in 0..grid.eta {
                    let id = grid.index(i, j, kk);
                    let want = f0 / (grid.mu * k * k) * (k * grid.node(i, j, kk).z).sin();
                    assert_relative_eq!(u[0][id], want, epsilon = 1e-10);
                    assert_relative_eq!(u[1][id], 0.0, epsilon = 1e-12);
                    assert_relative_eq!(u[2][id], 0.0, epsilon = 1e-12);
                    assert_relative_eq!(p[id], 0.0, epsilon = 1e-12);
                }
            }
        }
        assert!(max_spectral_divergence(&u, &grid) < 1e-10);
    }

    #[test]
    fn zero_forcing_gives_zero_flow() {
        let grid = grid8();
        let cells = grid.cells();
        let f = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
        let (u, p) = stokes_solve(&f, &grid).unwrap();
        assert!(u.iter().all(|c| c.iter().all(|v| *v == 0.0)));
        assert!(p.iter().all(|v| *v == 0.0));
    }

    /// Pure-gradient forcing is absorbed entirely by the pressure.
    #[test]
    fn gradient_forcing_recovers_pressure() {
        let grid = EulerianGrid::new(1.0, 16, 1.7).unwrap();
        let cells = grid.cells();
        let mut f = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
        let mut phi = vec![0.0; cells];
        let a = PI / grid.l;
        for kk in 0..grid.eta {
            for j in 0..grid.eta {
                for i in 0..grid.eta {
                    let x = grid.node(i, j, kk);
                    let id = grid.index(i, j, kk);
                    phi[id] = (a * x.x).sin() * (2.0 * a * x.y).cos();
                    f[0][id] = a * (a * x.x).cos() * (2.0 * a * x.y).cos();
                    f[1][id] = -2.0 * a * (a * x.x).sin() * (2.0 * a * x.y).sin();
                }
            }
        }
        let (u, p) = stokes_solve(&f, &grid).unwrap();
        for axis in 0..3 {
            let m = u[axis].iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(m < 1e-11, "axis {axis} velocity {m} under gradient forcing");
        }
        let mean = p.iter().sum::<f64>() / cells as f64;
        for (pi, want) in p.iter().zip(&phi) {
            assert_relative_eq!(pi - mean, *want, epsilon = 1e-9);
        }
    }

    #[test]
    fn solver_is_linear_and_divergence_free() {
        let grid = grid8();
        let cells = grid.cells();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut rand_field = || -> [Vec<f64>; 3] {
            let mut f = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
            for axis in 0..3 {
                for v in f[axis].iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
                // Remove the mean so the solvability precondition holds.
                let mean = f[axis].iter().sum::<f64>() / cells as f64;
                for v in f[axis].iter_mut() {
                    *v -= mean;
                }
            }
            f
        };
        let f1 = rand_field();
        let f2 = rand_field();
        let (alpha, beta) = (0.37, -1.21);
        let mut combo = [Vec::new(), Vec::new(), Vec::new()];
        for axis in 0..3 {
            combo[axis] =
                f1[axis].iter().zip(&f2[axis]).map(|(a, b)| alpha * a + beta * b).collect();
        }
        let (u1, p1) = stokes_solve(&f1, &grid).unwrap();
        let (u2, p2) = stokes_solve(&f2, &grid).unwrap();
        let (uc, pc) = stokes_solve(&combo, &grid).unwrap();
        for axis in 0..3 {
            for ((a, b), c) in u1[axis].iter().zip(&u2[axis]).zip(&uc[axis]) {
                assert_relative_eq!(alpha * a + beta * b, *c, epsilon = 1e-11);
            }
        }
        for ((a, b), c) in p1.iter().zip(&p2).zip(&pc) {
            assert_relative_eq!(alpha * a + beta * b, *c, epsilon = 1e-11);
        }
        assert!(max_spectral_divergence(&u1, &grid) < 1e-10);
        assert!(max_spectral_divergence(&uc, &grid) < 1e-10);
    }

    #[test]
    fn net_forcing_is_rejected() {
        let grid = grid8();
        let cells = grid.cells();
        let f = [vec![1.0; cells], vec![0.0; cells], vec![0.0; cells]];
        match stokes_solve(&f, &grid) {
            Err(Error::NetForce { net, .. }) => assert!(net > 0.0),
            other => panic!("expected a net-force error, got {other:?}"),
        }
    }
}
