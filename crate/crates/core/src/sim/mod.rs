//! Immersed-boundary time stepping for closed elastic shells in
//! periodic Stokes flow.
//!
//! One step runs the same six stages in every scenario: refit the
//! surface from its tracked nodes, evaluate force densities at the
//! evaluation nodes, weight them into forces and spread onto the grid,
//! solve for velocity, interpolate back at the tracked nodes, and move
//! them by forward Euler. Scenario modules add their extra structures
//! (tethered capillary, spring-lattice cortex) on top of these pieces.

pub mod bleb;
pub mod rbc;
pub mod relax;

use crate::error::{Error, Result};
use crate::fluid::{interpolate, spread, stokes_solve, EulerianGrid};
use crate::geometry::first_form;
use crate::harmonics::{build_basis, fit_interpolant, HarmonicBasis, ShellInterpolant, SurfaceJet};
use crate::ldsm::{ldsm_area_weights, ldsm_forces, triangulate, TriMesh};
use crate::material::ElasticMaterial;
use crate::points::SpherePointSet;
use crate::quadrature::{first_form_det, reference_weights, QuadratureWeights};
use crate::shapes::ReferenceShape;
use crate::shell::{bending_density_at, node_normal, vd_force_densities};
use crate::vec3::Vec3;
use std::sync::Arc;

/// Elastic shell tracked at the interpolation nodes of a harmonic
/// basis, with forces evaluated on a (usually finer) evaluation set.
pub struct ShvdShell {
    pub basis: Arc<HarmonicBasis>,
    /// Current positions at the interpolation nodes.
    pub positions: Vec<Vec3>,
    pub eval: SpherePointSet,
    /// Reference jets at the evaluation nodes.
    pub jets_ref: Vec<SurfaceJet>,
    /// Reference-area weights at the evaluation nodes.
    pub weights: QuadratureWeights,
    pub material: ElasticMaterial,
}

/// Force evaluation of a fitted shell at its evaluation nodes.
pub struct ShellForceEval {
    /// Current surface positions at the evaluation nodes.
    pub positions: Vec<Vec3>,
    /// Force per unit reference area.
    pub density: Vec<Vec3>,
    /// Density times nodal reference-area weight.
    pub force: Vec<Vec3>,
    /// Current surface area by the same quadrature.
    pub area: f64,
    /// True when the bending curvature field overran the basis degree.
    pub bending_under_resolved: bool,
}

impl ShvdShell {
    /// Builds a shell resting on `shape`. `w_sphere` must be
    /// unit-sphere quadrature weights for the evaluation set; they are
    /// transferred to the reference surface here.
    pub fn new<S: ReferenceShape + ?Sized>(
        interp: &SpherePointSet,
        interp_deg: usize,
        eval: &SpherePointSet,
        w_sphere: &QuadratureWeights,
        shape: &S,
        material: ElasticMaterial,
    ) -> Result<ShvdShell> {
        material.validate()?;
        let basis = Arc::new(build_basis(interp, interp_deg)?);
        let positions = (0..interp.n)
            .map(|i| shape.position(interp.lambda[i], interp.theta[i]))
            .collect();
        let jets_ref: Vec<SurfaceJet> = (0..eval.n)
            .map(|i| shape.jet(eval.lambda[i], eval.theta[i]))
            .collect();
        let weights = reference_weights(eval, w_sphere, &jets_ref)?;
        Ok(ShvdShell {
            basis,
            positions,
            eval: eval.clone(),
            jets_ref,
            weights,
            material,
        })
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn n(&self) -> usize {
        self.eval.n
    }

    /// Rigidly shifts the current configuration.
    pub fn translate(&mut self, v: Vec3) {
        for x in &mut self.positions {
            *x += v;
        }
    }

    /// Fits the interpolant to the current tracked positions.
    pub fn fit(&self) -> Result<ShellInterpolant> {
        fit_interpolant(&self.basis, &self.positions)
    }

    /// Steps one through five of the update in one sweep: fit, evaluate
    /// jets, form densities (in-plane plus bending when enabled), and
    /// weight them into forces.
    pub fn force_eval(&self) -> Result<ShellForceEval> {
        let interp = self.fit()?;
        self.force_eval_with(&interp)
    }

    pub fn force_eval_with(&self, interp: &ShellInterpolant) -> Result<ShellForceEval> {
        let jets_x = interp.jets(&self.eval.lambda, &self.eval.theta)?;
        let mut density = vd_force_densities(&jets_x, &self.jets_ref, &self.material)?;
        let mut bending_under_resolved = false;
        if self.material.bending != 0.0 {
            let bf = bending_density_at(
                interp,
                &self.basis,
                &jets_x,
                &self.jets_ref,
                &self.eval.lambda,
                &self.eval.theta,
                self.material.bending,
            )?;
            bending_under_resolved = bf.under_resolved;
            for (d, b) in density.iter_mut().zip(&bf.density) {
                *d += *b;
            }
        }
        let mut positions = Vec::with_capacity(self.n());
        let mut force = Vec::with_capacity(self.n());
        let mut area = 0.0;
        for i in 0..self.n() {
            positions.push(jets_x[i].x);
            force.push(density[i] * self.weights.w[i]);
            let ratio = (first_form(&jets_x[i]).det() / first_form(&self.jets_ref[i]).det()).sqrt();
            area += ratio * self.weights.w[i];
        }
        Ok(ShellForceEval {
            positions,
            density,
            force,
            area,
            bending_under_resolved,
        })
    }

    /// Enclosed volume of the fitted surface, (1/3)∮ X·n̂ dA over the
    /// current configuration.
    pub fn volume(&self) -> Result<f64> {
        let interp = self.fit()?;
        let jets = interp.jets(&self.eval.lambda, &self.eval.theta)?;
        let mut v = 0.0;
        for i in 0..self.n() {
            let n_hat = node_normal(&jets[i], i)?;
            let ratio = (first_form_det(&jets[i]) / first_form_det(&self.jets_ref[i])).sqrt();
            v += jets[i].x.dot(n_hat) * ratio * self.weights.w[i] / 3.0;
        }
        Ok(v)
    }
}

/// Triangulated shell: forces and velocities both live on the mesh
/// vertices, which double as the tracked nodes.
pub struct LdsmShell {
    pub mesh: TriMesh,
    /// Reference-area weight of each vertex (third of adjacent areas).
    pub weights: Vec<f64>,
    pub material: ElasticMaterial,
}

impl LdsmShell {
    /// Triangulates the reference point cloud and pairs it with the
    /// current positions (same index order).
    pub fn new(current: Vec<Vec3>, reference: Vec<Vec3>, material: ElasticMaterial) -> Result<LdsmShell> {
        material.validate()?;
        if current.len() != reference.len() {
            return Err(Error::InvalidInput(format!(
                "{} current positions for {} reference points",
                current.len(),
                reference.len()
            )));
        }
        let skeleton = triangulate(&reference)?;
        let mesh = TriMesh {
            verts: current,
            ref_verts: reference,
            tris: skeleton.tris,
        };
        mesh.validate()?;
        let weights = ldsm_area_weights(&mesh);
        Ok(LdsmShell { mesh, weights, material })
    }

    pub fn n(&self) -> usize {
        self.mesh.verts.len()
    }

    /// Vertex forces (already integrated, not densities).
    pub fn forces(&self) -> Result<Vec<Vec3>> {
        ldsm_forces(&self.mesh, &self.material)
    }
}

/// Diagnostics of one fluid round trip.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    /// Net Lagrangian force handed to the solver, largest component.
    pub net_force: f64,
    /// Largest interpolated node speed.
    pub max_speed: f64,
}

/// Spreads every (positions, forces) contribution plus an optional grid
/// force field, and solves for the velocity. Returns the largest net
/// force component before solving.
///
/// Closed-shell quadrature leaves a small residual net force (it
/// vanishes only in the surface integral, not in its discrete sum), so
/// the strict solver precondition cannot be applied to stepping fields
/// directly. Instead a loose guard catches genuinely unbalanced input,
/// such as a forgotten counterforce, and the residual mean is removed
/// before the solve. That subtraction only touches the zero mode the
/// solver gauges away, so velocity and pressure are unchanged by it.
pub fn solve_with_contributions(
    grid: &EulerianGrid,
    contributions: &[(&[Vec3], &[Vec3])],
    grid_force: Option<&[Vec<f64>; 3]>,
) -> Result<([Vec<f64>; 3], Vec<f64>, f64)> {
    let cells = grid.cells();
    let mut f = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
    let mut gross = 0.0_f64;
    for (positions, forces) in contributions {
        let part = spread(forces, positions, grid)?;
        for c in 0..3 {
            for (acc, v) in f[c].iter_mut().zip(&part[c]) {
                *acc += *v;
            }
        }
        gross += forces.iter().map(|v| v.norm()).sum::<f64>();
    }
    if let Some(extra) = grid_force {
        let h3 = grid.h().powi(3);
        for c in 0..3 {
            if extra[c].len() != cells {
                return Err(Error::InvalidInput(format!(
                    "grid force component has {} entries, grid has {cells}",
                    extra[c].len()
                )));
            }
            let mut comp_gross = 0.0;
            for (acc, v) in f[c].iter_mut().zip(&extra[c]) {
                *acc += *v;
                comp_gross += v.abs();
            }
            gross += comp_gross * h3;
        }
    }
    let h3 = grid.h().powi(3);
    let mut net = Vec3::zero();
    for c in 0..3 {
        let total: f64 = f[c].iter().sum();
        match c {
            0 => net.x = total * h3,
            1 => net.y = total * h3,
            _ => net.z = total * h3,
        }
    }
    let net_mag = net.max_abs();
    let guard = 1e-3;
    if net_mag > guard * (1.0 + gross) {
        return Err(Error::NetForce { net: net_mag, tol: guard, scale: gross });
    }
    let volume = cells as f64 * h3;
    for (c, mean) in [net.x, net.y, net.z].into_iter().enumerate() {
        let shift = mean / volume;
        for v in f[c].iter_mut() {
            *v -= shift;
        }
    }
    let (u, p) = stokes_solve(&f, grid)?;
    Ok((u, p, net_mag))
}

fn max_speed(velocities: &[Vec3]) -> f64 {
    velocities.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// One forward-Euler step of a free harmonic shell.
pub fn step_shvd(shell: &mut ShvdShell, grid: &EulerianGrid, dt: f64) -> Result<StepReport> {
    let fe = shell.force_eval()?;
    let (u, _p, net_force) =
        solve_with_contributions(grid, &[(&fe.positions, &fe.force)], None)?;
    let vel = interpolate(&u, &shell.positions, grid);
    for (x, v) in shell.positions.iter_mut().zip(&vel) {
        *x += *v * dt;
    }
    Ok(StepReport { net_force, max_speed: max_speed(&vel) })
}

/// One forward-Euler step of a free triangulated shell.
pub fn step_ldsm(shell: &mut LdsmShell, grid: &EulerianGrid, dt: f64) -> Result<StepReport> {
    let forces = shell.forces()?;
    let (u, _p, net_force) =
        solve_with_contributions(grid, &[(&shell.mesh.verts, &forces)], None)?;
    let vel = interpolate(&u, &shell.mesh.verts, grid);
    for (x, v) in shell.mesh.verts.iter_mut().zip(&vel) {
        *x += *v * dt;
    }
    Ok(StepReport { net_force, max_speed: max_speed(&vel) })
}

/// Plain average of a point cloud.
pub fn centroid(points: &[Vec3]) -> Vec3 {
    let mut c = Vec3::zero();
    for p in points {
        c += *p;
    }
    c * (1.0 / points.len().max(1) as f64)
}

/// Largest distance from the centroid, minus `rest_radius`: the
/// displacement metric of the relaxation runs.
pub fn max_radial_displacement(points: &[Vec3], rest_radius: f64) -> f64 {
    let c = centroid(points);
    points.iter().fold(f64::MIN, |a, p| a.max((*p - c).norm())) - rest_radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::ElasticMaterial;
    use crate::points::optimized_points;
    use crate::quadrature::unit_sphere_weights;
    use crate::shapes::{Ellipsoid, Sphere};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sphere_shell(n: usize, deg: usize, material: ElasticMaterial) -> ShvdShell {
        let pts = optimized_points(n, 300, 80).unwrap();
        let w = unit_sphere_weights(&pts, deg).unwrap();
        ShvdShell::new(&pts, deg, &pts, &w, &Sphere { radius: 1.0 }, material).unwrap()
    }

    #[test]
    fn shell_at_reference_is_static() {
        let material = ElasticMaterial::neo_hookean(2.5, 50.0);
        let mut shell = sphere_shell(81, 8, material);
        let grid = EulerianGrid::new(2.0, 16, 1.0).unwrap();
        let before = shell.positions.clone();
        let rep = step_shvd(&mut shell, &grid, 0.01).unwrap();
        assert!(rep.max_speed < 1e-10, "rest shell moved at {}", rep.max_speed);
        for (a, b) in shell.positions.iter().zip(&before) {
            assert!((*a - *b).max_abs() < 1e-12);
        }
    }

    #[test]
    fn ldsm_shell_at_reference_is_static() {
        let pts = optimized_points(225, 300, 0).unwrap();
        let verts: Vec<Vec3> = pts.xyz.clone();
        let material = ElasticMaterial::neo_hookean(2.5, 50.0);
        let mut shell = LdsmShell::new(verts.clone(), verts, material).unwrap();
        let grid = EulerianGrid::new(2.0, 16, 1.0).unwrap();
        let rep = step_ldsm(&mut shell, &grid, 0.01).unwrap();
        assert!(rep.max_speed < 1e-10, "rest mesh moved at {}", rep.max_speed);
    }

    #[test]
    fn sphere_volume_matches_closed_form() {
        let material = ElasticMaterial::neo_hookean(1.0, 1.0);
        let shell = sphere_shell(225, 14, material);
        let v = shell.volume().unwrap();
        assert_relative_eq!(v, 4.0 * PI / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn deformed_shell_spreads_zero_net_force() {
        let mut material = ElasticMaterial::neo_hookean(1.0, 1.0);
        material.tension = 1.0;
        let pts = optimized_points(225, 300, 80).unwrap();
        let w = unit_sphere_weights(&pts, 14).unwrap();
        let shape = Ellipsoid { a: 1.2, b: 1.0 / 1.2_f64.sqrt(), c: 1.0 / 1.2_f64.sqrt() };
        let mut shell =
            ShvdShell::new(&pts, 14, &pts, &w, &Sphere { radius: 1.0 }, material).unwrap();
        // Deform the tracked nodes onto the ellipsoid while keeping the
        // sphere as reference.
        for (i, x) in shell.positions.iter_mut().enumerate() {
            *x = shape.position(shell.basis.points.lambda[i], shell.basis.points.theta[i]);
        }
        let fe = shell.force_eval().unwrap();
        let net = fe.force.iter().fold(Vec3::zero(), |a, f| a + *f);
        let scale: f64 = fe.force.iter().map(|f| f.max_abs()).sum();
        // The force integral vanishes identically on the continuous
        // surface; the discrete sum carries only the quadrature residual
        // of the divergence-form integrand, which shrinks with n.
        assert!(net.max_abs() < 1e-6 * scale, "net {net:?} vs scale {scale}");
    }

    #[test]
    fn translated_shell_sees_identical_forces() {
        let material = ElasticMaterial::neo_hookean(1.0, 1.0);
        let pts = optimized_points(81, 200, 60).unwrap();
        let w = unit_sphere_weights(&pts, 8).unwrap();
        let shape = Ellipsoid { a: 1.1, b: 1.0, c: 0.95 };
        let sphere = Sphere { radius: 1.0 };
        let mut shell = ShvdShell::new(&pts, 8, &pts, &w, &sphere, material).unwrap();
        for (i, x) in shell.positions.iter_mut().enumerate() {
            *x = shape.position(pts.lambda[i], pts.theta[i]);
        }
        let base = shell.force_eval().unwrap();
        shell.translate(Vec3::new(0.31, -0.11, 0.07));
        let moved = shell.force_eval().unwrap();
        for (a, b) in base.density.iter().zip(&moved.density) {
            assert!((*a - *b).max_abs() < 1e-9, "density changed under translation");
        }
    }

    #[test]
    fn half_step_update_is_second_order_consistent() {
        // One Euler step of size dt differs from two steps of dt/2 by
        // O(dt^2); halving dt again must shrink that defect about 4x.
        let material = ElasticMaterial::neo_hookean(1.0, 1.0);
        let grid = EulerianGrid::new(2.0, 16, 1.0).unwrap();
        let pts = optimized_points(81, 200, 60).unwrap();
        let w = unit_sphere_weights(&pts, 8).unwrap();
        let shape = Ellipsoid { a: 1.2, b: 1.0 / 1.2_f64.sqrt(), c: 1.0 / 1.2_f64.sqrt() };
        let build = || {
            let mut s =
                ShvdShell::new(&pts, 8, &pts, &w, &Sphere { radius: 1.0 }, material).unwrap();
            for (i, x) in s.positions.iter_mut().enumerate() {
                *x = shape.position(pts.lambda[i], pts.theta[i]);
            }
            s
        };
        let defect = |dt: f64| {
            let mut coarse = build();
            step_shvd(&mut coarse, &grid, dt).unwrap();
            let mut fine = build();
            step_shvd(&mut fine, &grid, dt / 2.0).unwrap();
            step_shvd(&mut fine, &grid, dt / 2.0).unwrap();
            coarse
                .positions
                .iter()
                .zip(&fine.positions)
                .fold(0.0_f64, |a, (x, y)| a.max((*x - *y).max_abs()))
        };
        let d1 = defect(0.08);
        let d2 = defect(0.04);
        let ratio = d1 / d2;
        assert!(
            (2.5..6.0).contains(&ratio),
            "local error ratio {ratio} (defects {d1}, {d2}) not O(dt^2)"
        );
    }

    #[test]
    fn centroid_and_displacement_metrics() {
        let pts = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, -2.0, 0.0),
        ];
        let c = centroid(&pts);
        assert!(c.max_abs() < 1e-15);
        assert_relative_eq!(max_radial_displacement(&pts, 1.0), 1.0, epsilon = 1e-15);
    }
}
