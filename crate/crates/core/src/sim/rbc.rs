//! Red blood cell in capillary flow.
//!
//! The cell is a biconcave shell driven through a tethered cylindrical
//! tube by a uniform body force inside the tube (with a uniform
//! counter-force outside so the periodic Stokes solve stays
//! well-posed). Tether forces are plain nodal springs back to the rest
//! cylinder; because springs are not translation invariant, every step
//! ends with the constant velocity correction that restores a zero
//! tether-force sum at the next step.

use crate::error::{Error, Result};
use crate::fluid::{interpolate, EulerianGrid};
use crate::geometry::curvature;
use crate::harmonics::SurfaceJet;
use crate::material::ElasticMaterial;
use crate::points::SpherePointSet;
use crate::quadrature::QuadratureWeights;
use crate::shapes::{unit_sphere_jet, ReferenceShape};
use crate::sim::{centroid, solve_with_contributions, ShvdShell};
use crate::vec3::Vec3;
use std::f64::consts::PI;

/// Biconcave rest shape: the unit-sphere map (x_s, y_s, z_s) sent to
///
///   R · ( x_s (0.21 + 2ρ - 1.12ρ²) / 2, y_s, z_s ),  ρ = y_s² + z_s²,
///
/// with the x-axis as the axis of rotational symmetry.
#[derive(Debug, Clone, Copy)]
pub struct RbcShape {
    pub r: f64,
}

impl ReferenceShape for RbcShape {
    fn jet(&self, lambda: f64, theta: f64) -> SurfaceJet {
        let s = unit_sphere_jet(lambda, theta);
        let rho = s.x.y * s.x.y + s.x.z * s.x.z;
        let rho_l = 2.0 * (s.x.y * s.xl.y + s.x.z * s.xl.z);
        let rho_t = 2.0 * (s.x.y * s.xt.y + s.x.z * s.xt.z);
        let rho_ll = 2.0 * (s.xl.y * s.xl.y + s.x.y * s.xll.y + s.xl.z * s.xl.z + s.x.z * s.xll.z);
        let rho_lt = 2.0 * (s.xt.y * s.xl.y + s.x.y * s.xlt.y + s.xt.z * s.xl.z + s.x.z * s.xlt.z);
        let rho_tt = 2.0 * (s.xt.y * s.xt.y + s.x.y * s.xtt.y + s.xt.z * s.xt.z + s.x.z * s.xtt.z);
        // g(ρ) = 0.21 + 2ρ - 1.12ρ² and its derivatives.
        let g = 0.21 + 2.0 * rho - 1.12 * rho * rho;
        let gp = 2.0 - 2.24 * rho;
        let gpp = -2.24;
        let half_r = 0.5 * self.r;
        let fx = |x: f64, g: f64| half_r * x * g;
        let x = s.x.x;
        let (xl, xt) = (s.xl.x, s.xt.x);
        let (xll, xlt, xtt) = (s.xll.x, s.xlt.x, s.xtt.x);
        let vx = fx(x, g);
        let vx_l = half_r * (xl * g + x * gp * rho_l);
        let vx_t = half_r * (xt * g + x * gp * rho_t);
        let vx_ll =
            half_r * (xll * g + 2.0 * xl * gp * rho_l + x * (gpp * rho_l * rho_l + gp * rho_ll));
        let vx_lt = half_r
            * (xlt * g + xl * gp * rho_t + xt * gp * rho_l + x * (gpp * rho_l * rho_t + gp * rho_lt));
        let vx_tt =
            half_r * (xtt * g + 2.0 * xt * gp * rho_t + x * (gpp * rho_t * rho_t + gp * rho_tt));
        let lift = |vx: f64, base: Vec3| Vec3::new(vx, self.r * base.y, self.r * base.z);
        SurfaceJet {
            x: lift(vx, s.x),
            xl: lift(vx_l, s.xl),
            xt: lift(vx_t, s.xt),
            xll: lift(vx_ll, s.xll),
            xlt: lift(vx_lt, s.xlt),
            xtt: lift(vx_tt, s.xtt),
        }
    }
}

/// Cylindrical tube tethered to its rest configuration node by node.
#[derive(Debug, Clone)]
pub struct Capillary {
    /// Rest positions (tether anchors).
    pub anchors: Vec<Vec3>,
    pub positions: Vec<Vec3>,
    pub k_tether: f64,
    /// Lateral area carried by each node (uniform for this mesh).
    pub node_area: f64,
    /// Total lateral area.
    pub area: f64,
}

impl Capillary {
    /// Structured tube of radius `radius` along x from `x0` to `x1`,
    /// with node spacing near `spacing` both around and along.
    pub fn cylinder(radius: f64, x0: f64, x1: f64, spacing: f64, k_tether: f64) -> Result<Capillary> {
        if !(radius > 0.0) || !(x1 > x0) || !(spacing > 0.0) || !(k_tether >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad capillary geometry: radius {radius}, x [{x0}, {x1}], spacing {spacing}, k {k_tether}"
            )));
        }
        let len = x1 - x0;
        let n_ring = ((2.0 * PI * radius / spacing).round() as usize).max(3);
        let n_axial = ((len / spacing).round() as usize).max(1);
        let dx = len / n_axial as f64;
        let mut anchors = Vec::with_capacity(n_ring * n_axial);
        for i in 0..n_axial {
            let x = x0 + (i as f64 + 0.5) * dx;
            for j in 0..n_ring {
                let phi = 2.0 * PI * j as f64 / n_ring as f64;
                anchors.push(Vec3::new(x, radius * phi.cos(), radius * phi.sin()));
            }
        }
        let area = 2.0 * PI * radius * len;
        let node_area = area / anchors.len() as f64;
        Ok(Capillary { positions: anchors.clone(), anchors, k_tether, node_area, area })
    }

    pub fn n(&self) -> usize {
        self.anchors.len()
    }

    /// Nodal spring forces -k (X - Z). These are forces, not densities;
    /// they spread without further weighting.
    pub fn tether_forces(&self) -> Vec<Vec3> {
        self.positions
            .iter()
            .zip(&self.anchors)
            .map(|(x, z)| (*z - *x) * self.k_tether)
            .collect()
    }

    /// Constant velocity that, added to the intermediate update, makes
    /// the tether forces sum to zero at the next step:
    /// u_c = ∫(Z - X̂) dA / (A Δt).
    pub fn velocity_correction(&self, intermediate: &[Vec3], dt: f64) -> Vec3 {
        let mut s = Vec3::zero();
        for (z, x) in self.anchors.iter().zip(intermediate) {
            s += *z - *x;
        }
        s * (self.node_area / (self.area * dt))
    }
}

/// Uniform body force `g` along +x inside the cylinder r ≤ radius
/// (periodically extended in x), balanced by a uniform counter-force
/// outside so the field integrates to zero.
pub fn tube_background_force(grid: &EulerianGrid, radius: f64, g: f64) -> [Vec<f64>; 3] {
    let cells = grid.cells();
    let mut fx = vec![0.0; cells];
    let mut inside = 0usize;
    for k in 0..grid.eta {
        for j in 0..grid.eta {
            for i in 0..grid.eta {
                let p = grid.node(i, j, k);
                if p.y * p.y + p.z * p.z <= radius * radius {
                    fx[grid.index(i, j, k)] = 1.0;
                    inside += 1;
                }
            }
        }
    }
    let outside = cells - inside;
    let counter = -g * inside as f64 / outside.max(1) as f64;
    for v in fx.iter_mut() {
        *v = if *v > 0.0 { g } else { counter };
    }
    [fx, vec![0.0; cells], vec![0.0; cells]]
}

/// Parameters for the capillary-flow scenario, in pN, μm, s.
#[derive(Debug, Clone)]
pub struct RbcConfig {
    pub eta: usize,
    /// Half-width of the cubic box.
    pub half_width: f64,
    pub mu: f64,
    pub shear: f64,
    pub dilation: f64,
    pub bending: f64,
    pub r_rbc: f64,
    pub cell_center: Vec3,
    pub cap_radius: f64,
    pub cap_x0: f64,
    pub cap_x1: f64,
    pub k_tether: f64,
    /// Tube nodes per grid spacing h (2 matches the reference setup).
    pub cap_nodes_per_h: f64,
    pub background: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
}

impl RbcConfig {
    pub fn with_eta(eta: usize) -> Self {
        RbcConfig {
            eta,
            half_width: 12.0,
            mu: 1.2e-3,
            shear: 2.5,
            dilation: 50.0,
            bending: 0.1,
            r_rbc: 3.91,
            cell_center: Vec3::new(-8.0, 0.0, 0.0),
            cap_radius: 5.0,
            cap_x0: -8.0,
            cap_x1: 8.0,
            k_tether: 2.45,
            cap_nodes_per_h: 2.0,
            background: 0.08,
            dt: 1e-4,
            t_end: 0.05,
            sample_every: 10,
        }
    }

    pub fn material(&self) -> ElasticMaterial {
        let mut m = ElasticMaterial::neo_hookean(self.shear, self.dilation);
        m.bending = self.bending;
        m
    }
}

/// Time series and end-state diagnostics of one capillary run.
#[derive(Debug, Clone, Default)]
pub struct RbcRun {
    pub t: Vec<f64>,
    /// Current membrane area at the sample times.
    pub area: Vec<f64>,
    /// Cell centroid x (tracked nodes).
    pub centroid_x: Vec<f64>,
    pub max_speed: Vec<f64>,
    /// Mean-curvature sign changes around the final xz outline.
    pub meridian_sign_changes: usize,
    /// Steps whose bending curvature field overran the basis.
    pub under_resolved_steps: usize,
}

/// Counts sign changes of the mean curvature around the closed xz-plane
/// outline of the fitted surface (the λ = 0 and λ = π meridians).
pub fn outline_curvature_sign_changes(shell: &ShvdShell, samples_per_half: usize) -> Result<usize> {
    let interp = shell.fit()?;
    let mut hs = Vec::with_capacity(2 * samples_per_half);
    // Interior θ samples only: the poles are parameterization artifacts.
    for half in 0..2 {
        let lambda = if half == 0 { 0.0 } else { PI };
        for j in 0..samples_per_half {
            let theta = -PI / 2.0 + (j as f64 + 1.0) * PI / (samples_per_half as f64 + 1.0);
            let jet = interp.jet(lambda, theta)?;
            hs.push(curvature(&jet, j)?.h);
        }
    }
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for h in hs {
        if h == 0.0 {
            continue;
        }
        if let Some(p) = prev {
            if p * h < 0.0 {
                count += 1;
            }
        }
        prev = Some(h);
    }
    Ok(count)
}

/// Runs the tube with no cell for `steps` steps and reports the largest
/// axial velocity on the tube centerline (y = z = 0, x within the
/// tube).
pub fn empty_capillary_peak_velocity(cfg: &RbcConfig, steps: usize) -> Result<f64> {
    let grid = EulerianGrid::new(cfg.half_width, cfg.eta, cfg.mu)?;
    let spacing = grid.h() / cfg.cap_nodes_per_h;
    let mut cap = Capillary::cylinder(cfg.cap_radius, cfg.cap_x0, cfg.cap_x1, spacing, cfg.k_tether)?;
    let background = tube_background_force(&grid, cfg.cap_radius, cfg.background);
    let mut peak = 0.0_f64;
    for _ in 0..steps {
        let tether = cap.tether_forces();
        let (u, _p, _net) =
            solve_with_contributions(&grid, &[(&cap.positions, &tether)], Some(&background))?;
        let vel = interpolate(&u, &cap.positions, &grid);
        let mut intermediate = cap.positions.clone();
        for (x, v) in intermediate.iter_mut().zip(&vel) {
            *x += *v * cfg.dt;
        }
        let u_c = cap.velocity_correction(&intermediate, cfg.dt);
        for (x, xi) in cap.positions.iter_mut().zip(&intermediate) {
            *x = *xi + u_c * cfg.dt;
        }
        // Centerline runs along x at j = k = η/2 where y = z = 0.
        let mid = cfg.eta / 2;
        peak = 0.0;
        for i in 0..cfg.eta {
            let p = grid.node(i, mid, mid);
            if p.x >= cfg.cap_x0 && p.x <= cfg.cap_x1 {
                peak = peak.max(u[0][grid.index(i, mid, mid)]);
            }
        }
    }
    Ok(peak)
}

/// Full capillary-flow scenario with the harmonic shell.
pub fn run_rbc(
    cfg: &RbcConfig,
    interp: &SpherePointSet,
    interp_deg: usize,
    eval: &SpherePointSet,
    w_sphere: &QuadratureWeights,
) -> Result<RbcRun> {
    let grid = EulerianGrid::new(cfg.half_width, cfg.eta, cfg.mu)?;
    let shape = RbcShape { r: cfg.r_rbc };
    let mut shell = ShvdShell::new(interp, interp_deg, eval, w_sphere, &shape, cfg.material())?;
    shell.translate(cfg.cell_center);
    let spacing = grid.h() / cfg.cap_nodes_per_h;
    let mut cap = Capillary::cylinder(cfg.cap_radius, cfg.cap_x0, cfg.cap_x1, spacing, cfg.k_tether)?;
    let background = tube_background_force(&grid, cfg.cap_radius, cfg.background);

    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut run = RbcRun::default();
    let record = |run: &mut RbcRun, t: f64, area: f64, speed: f64, positions: &[Vec3]| {
        run.t.push(t);
        run.area.push(area);
        run.centroid_x.push(centroid(positions).x);
        run.max_speed.push(speed);
    };

    for k in 0..steps {
        let fe = shell.force_eval()?;
        if fe.bending_under_resolved {
            run.under_resolved_steps += 1;
        }
        if k == 0 {
            record(&mut run, 0.0, fe.area, 0.0, &shell.positions);
        }
        let tether = cap.tether_forces();
        let (u, _p, _net) = solve_with_contributions(
            &grid,
            &[(&fe.positions, &fe.force), (&cap.positions, &tether)],
            Some(&background),
        )?;
        let cell_vel = interpolate(&u, &shell.positions, &grid);
        let cap_vel = interpolate(&u, &cap.positions, &grid);
        // Intermediate update, then the constant correction for all
        // structures.
        let mut cap_mid = cap.positions.clone();
        for (x, v) in cap_mid.iter_mut().zip(&cap_vel) {
            *x += *v * cfg.dt;
        }
        let u_c = cap.velocity_correction(&cap_mid, cfg.dt);
        for (x, xi) in cap.positions.iter_mut().zip(&cap_mid) {
            *x = *xi + u_c * cfg.dt;
        }
        let mut speed = 0.0_f64;
        for (x, v) in shell.positions.iter_mut().zip(&cell_vel) {
            *x += (*v + u_c) * cfg.dt;
            speed = speed.max((*v + u_c).norm());
        }
        let t = (k + 1) as f64 * cfg.dt;
        if (k + 1) % cfg.sample_every == 0 || k + 1 == steps {
            let fe_now = shell.force_eval()?;
            record(&mut run, t, fe_now.area, speed, &shell.positions);
        }
    }
    run.meridian_sign_changes = outline_curvature_sign_changes(&shell, 160)?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::optimized_points;
    use crate::quadrature::unit_sphere_weights;
    use crate::shapes::Sphere;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn biconcave_map_hits_known_points() {
        let shape = RbcShape { r: 3.91 };
        // On the axis (θ = 0, λ = 0): ρ = 0, g = 0.21.
        let tip = shape.position(0.0, 0.0);
        assert_relative_eq!(tip.x, 0.5 * 3.91 * 0.21, epsilon = 1e-14);
        assert!(tip.y.abs() < 1e-14 && tip.z.abs() < 1e-14);
        // At the pole (θ = π/2): the rim circle of radius R in z.
        let pole = shape.position(0.0, PI / 2.0);
        assert!(pole.x.abs() < 1e-14);
        assert_relative_eq!(pole.z, 3.91, epsilon = 1e-12);
    }

    #[test]
    fn biconcave_jet_matches_finite_differences() {
        let shape = RbcShape { r: 3.91 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let h = 1e-5;
        for _ in 0..60 {
            let lam = rng.gen_range(-3.0..3.0);
            let th = rng.gen_range(-1.4..1.4);
            let j = shape.jet(lam, th);
            let pp = shape.position(lam + h, th);
            let pm = shape.position(lam - h, th);
            let tp = shape.position(lam, th + h);
            let tm = shape.position(lam, th - h);
            let c = shape.position(lam, th);
            let fd_l = (pp - pm) * (1.0 / (2.0 * h));
            let fd_t = (tp - tm) * (1.0 / (2.0 * h));
            let fd_ll = (pp + pm - c * 2.0) * (1.0 / (h * h));
            let fd_tt = (tp + tm - c * 2.0) * (1.0 / (h * h));
            let ppp = shape.position(lam + h, th + h);
            let ppm = shape.position(lam + h, th - h);
            let pmp = shape.position(lam - h, th + h);
            let pmm = shape.position(lam - h, th - h);
            let fd_lt = (ppp - ppm - pmp + pmm) * (1.0 / (4.0 * h * h));
            assert!((j.xl - fd_l).max_abs() < 1e-7, "xl off at ({lam}, {th})");
            assert!((j.xt - fd_t).max_abs() < 1e-7, "xt off at ({lam}, {th})");
            assert!((j.xll - fd_ll).max_abs() < 1e-4, "xll off at ({lam}, {th})");
            assert!((j.xlt - fd_lt).max_abs() < 1e-4, "xlt off at ({lam}, {th})");
            assert!((j.xtt - fd_tt).max_abs() < 1e-4, "xtt off at ({lam}, {th})");
        }
    }

    #[test]
    fn capillary_mesh_sits_on_the_rest_cylinder() {
        let cap = Capillary::cylinder(5.0, -8.0, 8.0, 0.75, 2.45).unwrap();
        assert!(cap.n() > 300);
        for z in &cap.anchors {
            assert_relative_eq!((z.y * z.y + z.z * z.z).sqrt(), 5.0, epsilon = 1e-12);
            assert!(z.x > -8.0 && z.x < 8.0);
        }
        assert_relative_eq!(cap.area, 2.0 * PI * 5.0 * 16.0, epsilon = 1e-9);
        assert_relative_eq!(cap.node_area * cap.n() as f64, cap.area, epsilon = 1e-9);
        let rest = cap.tether_forces();
        assert!(rest.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn velocity_correction_cancels_uniform_drift() {
        let mut cap = Capillary::cylinder(5.0, -8.0, 8.0, 1.5, 2.45).unwrap();
        let drift = Vec3::new(0.3, -0.1, 0.05);
        let intermediate: Vec<Vec3> = cap.anchors.iter().map(|z| *z + drift).collect();
        let dt = 1e-3;
        let u_c = cap.velocity_correction(&intermediate, dt);
        assert!((u_c + drift * (1.0 / dt)).max_abs() < 1e-9 * drift.max_abs() / dt);
        for (x, xi) in cap.positions.iter_mut().zip(&intermediate) {
            *x = *xi + u_c * dt;
        }
        let total: Vec3 = cap.tether_forces().iter().fold(Vec3::zero(), |a, f| a + *f);
        assert!(total.max_abs() < 1e-10, "tether sum {total:?}");
    }

    #[test]
    fn background_force_integrates_to_zero() {
        let grid = EulerianGrid::new(12.0, 16, 1.2e-3).unwrap();
        let f = tube_background_force(&grid, 5.0, 0.08);
        let total: f64 = f[0].iter().sum();
        let scale: f64 = f[0].iter().map(|v| v.abs()).sum();
        assert!(total.abs() < 1e-12 * scale);
        assert!(f[1].iter().all(|v| *v == 0.0) && f[2].iter().all(|v| *v == 0.0));
        // Axis nodes are forced forward, corner nodes backward.
        let mid = 8;
        assert_relative_eq!(f[0][grid.index(0, mid, mid)], 0.08, epsilon = 1e-15);
        assert!(f[0][grid.index(0, 0, 0)] < 0.0);
    }

    #[test]
    fn tether_forces_stay_balanced_over_steps() {
        let mut cfg = RbcConfig::with_eta(8);
        cfg.dt = 5e-4;
        let grid = EulerianGrid::new(cfg.half_width, cfg.eta, cfg.mu).unwrap();
        let spacing = grid.h() / cfg.cap_nodes_per_h;
        let mut cap =
            Capillary::cylinder(cfg.cap_radius, cfg.cap_x0, cfg.cap_x1, spacing, cfg.k_tether)
                .unwrap();
        let background = tube_background_force(&grid, cfg.cap_radius, cfg.background);
        for step in 0..4 {
            let tether = cap.tether_forces();
            let total = tether.iter().fold(Vec3::zero(), |a, f| a + *f);
            let scale: f64 = tether.iter().map(|f| f.max_abs()).sum::<f64>() + 1e-30;
            assert!(
                total.max_abs() <= 1e-8 * scale.max(1e-12),
                "step {step}: tether sum {total:?} vs scale {scale}"
            );
            let (u, _p, _net) =
                solve_with_contributions(&grid, &[(&cap.positions, &tether)], Some(&background))
                    .unwrap();
            let vel = interpolate(&u, &cap.positions, &grid);
            let mut intermediate = cap.positions.clone();
            for (x, v) in intermediate.iter_mut().zip(&vel) {
                *x += *v * cfg.dt;
            }
            let u_c = cap.velocity_correction(&intermediate, cfg.dt);
            for (x, xi) in cap.positions.iter_mut().zip(&intermediate) {
                *x = *xi + u_c * cfg.dt;
            }
        }
    }

    #[test]
    fn sphere_outline_has_uniform_curvature_sign() {
        let pts = optimized_points(81, 200, 60).unwrap();
        let w = unit_sphere_weights(&pts, 8).unwrap();
        let material = ElasticMaterial::neo_hookean(1.0, 1.0);
        let shell =
            ShvdShell::new(&pts, 8, &pts, &w, &Sphere { radius: 1.0 }, material).unwrap();
        assert_eq!(outline_curvature_sign_changes(&shell, 60).unwrap(), 0);
    }

    #[test]
    fn biconcave_outline_curvature_changes_sign() {
        // The dimples flip the outline curvature even at rest.
        let pts = optimized_points(225, 300, 80).unwrap();
        let w = unit_sphere_weights(&pts, 14).unwrap();
        let material = ElasticMaterial::neo_hookean(2.5, 50.0);
        let shell =
            ShvdShell::new(&pts, 14, &pts, &w, &RbcShape { r: 3.91 }, material).unwrap();
        let changes = outline_curvature_sign_changes(&shell, 80).unwrap();
        assert!(changes >= 2, "expected dimple sign changes, got {changes}");
    }

    #[test]
    fn short_capillary_run_keeps_area_and_moves_forward() {
        let mut cfg = RbcConfig::with_eta(12);
        cfg.bending = 0.0;
        cfg.dt = 5e-5;
        cfg.t_end = 10.0 * cfg.dt;
        cfg.sample_every = 5;
        let interp = optimized_points(81, 200, 60).unwrap();
        let eval = optimized_points(225, 300, 80).unwrap();
        let w = unit_sphere_weights(&eval, 14).unwrap();
        let run = run_rbc(&cfg, &interp, 8, &eval, &w).unwrap();
        let a0 = run.area[0];
        for a in &run.area {
            assert!((a - a0).abs() < 0.01 * a0, "area drifted: {a} vs {a0}");
        }
        assert!(
            run.centroid_x.last().unwrap() > &run.centroid_x[0],
            "cell did not advance: {:?}",
            run.centroid_x
        );
    }
}
