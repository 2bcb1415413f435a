//! Cellular blebbing: an elastic membrane adhered to a contractile
//! spring-lattice cortex, with a bleb initiated by removing the
//! adhesive links in a small polar cap.
//!
//! The cortex is porous: it does not move with the fluid directly but
//! by a local drag law, U_cortex = U + (F_elastic + F_adhesion)/ξ, and
//! the reaction -F_drag = F_elastic + F_adhesion is spread to the
//! fluid at the cortex nodes. Adhesion forces are built as exact
//! opposite pairs after area weighting, and cortex spring forces cancel
//! edge by edge, so all spread fields keep a zero sum.

use crate::error::{Error, Result};
use crate::fluid::{interpolate, EulerianGrid};
use crate::ldsm::{ldsm_area_weights, triangulate};
use crate::material::ElasticMaterial;
use crate::points::SpherePointSet;
use crate::quadrature::QuadratureWeights;
use crate::shapes::Sphere;
use crate::sim::{solve_with_contributions, ShvdShell};
use crate::vec3::Vec3;
use std::f64::consts::PI;

/// Spring-lattice cortex on the edges of a triangulated sphere.
#[derive(Debug, Clone)]
pub struct Cortex {
    pub positions: Vec<Vec3>,
    /// Unique lattice edges (vertex index pairs).
    pub edges: Vec<[usize; 2]>,
    /// Rest edge lengths dℓ_ij.
    pub rest_len: Vec<f64>,
    /// Per-edge stiffness (8 k / 3dℓ_ij) · (dA_i + dA_j)/2.
    pub k_edge: Vec<f64>,
    /// Reference vertex areas dA_i (third of adjacent triangle areas).
    pub areas: Vec<f64>,
    /// Drag coefficient ξ.
    pub xi: f64,
}

impl Cortex {
    /// Builds the cortex as a sphere of `radius` over the given
    /// parameter nodes, triangulating the point cloud for the lattice.
    pub fn sphere(points: &SpherePointSet, radius: f64, k_avg: f64, xi: f64) -> Result<Cortex> {
        if !(radius > 0.0) || !(k_avg >= 0.0) || !(xi > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad cortex parameters: radius {radius}, k {k_avg}, xi {xi}"
            )));
        }
        let positions: Vec<Vec3> = points.xyz.iter().map(|u| *u * radius).collect();
        let mesh = triangulate(&positions)?;
        let areas = ldsm_area_weights(&mesh);
        let mut edge_set = std::collections::BTreeSet::new();
        for t in &mesh.tris {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edge_set.insert([a.min(b), a.max(b)]);
            }
        }
        let edges: Vec<[usize; 2]> = edge_set.into_iter().collect();
        let mut rest_len = Vec::with_capacity(edges.len());
        let mut k_edge = Vec::with_capacity(edges.len());
        for e in &edges {
            let dl = (positions[e[0]] - positions[e[1]]).norm();
            if dl < 1e-12 * radius {
                return Err(Error::InvalidInput(format!(
                    "cortex nodes {} and {} coincide; spring direction undefined",
                    e[0], e[1]
                )));
            }
            rest_len.push(dl);
            k_edge.push(8.0 * k_avg / (3.0 * dl) * 0.5 * (areas[e[0]] + areas[e[1]]));
        }
        Ok(Cortex { positions, edges, rest_len, k_edge, areas, xi })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Integrated spring force F_i dA_i at every node: each edge pulls
    /// its endpoints together with magnitude k_edge |X_i - X_j| / dℓ.
    /// Contributions cancel edge by edge, so the sum is exactly zero.
    pub fn spring_forces(&self) -> Vec<Vec3> {
        let mut f = vec![Vec3::zero(); self.n()];
        for (e, edge) in self.edges.iter().enumerate() {
            let d = self.positions[edge[0]] - self.positions[edge[1]];
            let g = d * (self.k_edge[e] / self.rest_len[e]);
            f[edge[0]] -= g;
            f[edge[1]] += g;
        }
        f
    }
}

/// Integrated adhesion forces for index-paired membrane and cortex
/// nodes. Each live link is a restoring spring of density stiffness
/// `k_adh` on the membrane side; the cortex side is the exact opposite
/// force, which encodes the area-ratio stiffness scaling.
pub fn adhesion_forces(
    mem_positions: &[Vec3],
    cortex_positions: &[Vec3],
    alive: &[bool],
    k_adh: f64,
    mem_areas: &[f64],
) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let n = mem_positions.len();
    if cortex_positions.len() != n || alive.len() != n || mem_areas.len() != n {
        return Err(Error::InvalidInput(format!(
            "adhesion arrays disagree: {} membrane, {} cortex, {} flags, {} areas",
            n,
            cortex_positions.len(),
            alive.len(),
            mem_areas.len()
        )));
    }
    let mut f_mem = vec![Vec3::zero(); n];
    let mut f_cortex = vec![Vec3::zero(); n];
    for i in 0..n {
        if !alive[i] {
            continue;
        }
        let gap = mem_positions[i] - cortex_positions[i];
        let f = gap * (-k_adh * mem_areas[i]);
        f_mem[i] = f;
        f_cortex[i] = -f;
    }
    Ok((f_mem, f_cortex))
}

/// Parameters of the blebbing model, in pN, μm, s.
#[derive(Debug, Clone)]
pub struct BlebConfig {
    pub eta: usize,
    /// Half-width of the cubic box (the cell sits at the origin).
    pub half_width: f64,
    pub mu: f64,
    pub r_mem: f64,
    pub r_cortex: f64,
    /// Membrane surface tension γ.
    pub tension: f64,
    /// Membrane shear modulus μ_E.
    pub shear: f64,
    /// Dilation ratio κ_E / μ_E.
    pub dilation: f64,
    pub k_cortex: f64,
    pub k_adh: f64,
    pub xi: f64,
    pub dt: f64,
    pub t_equil: f64,
    pub t_end: f64,
    /// Polar half-angle of the detached cap.
    pub bleb_angle: f64,
    pub sample_every: usize,
}

impl BlebConfig {
    pub fn with_eta(eta: usize) -> Self {
        BlebConfig {
            eta,
            half_width: 15.0,
            mu: 1.0,
            r_mem: 10.0,
            r_cortex: 9.99,
            tension: 40.0,
            shear: 40.0,
            dilation: 1.0,
            k_cortex: 87.0,
            k_adh: 3e4,
            xi: 10.0,
            dt: 1e-4,
            t_equil: 0.2,
            t_end: 2.0,
            bleb_angle: 2.0 * PI / 25.0,
            sample_every: 100,
        }
    }

    pub fn material(&self) -> ElasticMaterial {
        let mut m = ElasticMaterial::neo_hookean(self.shear, self.dilation);
        m.tension = self.tension;
        m
    }
}

/// Time series of one blebbing run. Times restart at zero when the
/// bleb is initiated; the equilibration phase reports only its final
/// boundary speed.
#[derive(Debug, Clone, Default)]
pub struct BlebRun {
    pub t: Vec<f64>,
    /// Vertical bleb extent minus its value at initiation (empty for
    /// control runs without a bleb).
    pub bleb_size: Vec<f64>,
    /// Enclosed membrane volume.
    pub volume: Vec<f64>,
    /// Largest boundary node speed (membrane or cortex).
    pub max_speed: Vec<f64>,
    /// Boundary speed at the end of equilibration.
    pub equil_speed: f64,
    /// Number of detached nodes.
    pub detached: usize,
    /// Number of ring nodes bounding the detached cap.
    pub ring: usize,
}

/// Attached nodes with at least one detached lattice neighbor.
pub fn ring_nodes(alive: &[bool], edges: &[[usize; 2]]) -> Vec<usize> {
    let mut on_ring = vec![false; alive.len()];
    for e in edges {
        let (a, b) = (e[0], e[1]);
        if alive[a] && !alive[b] {
            on_ring[a] = true;
        }
        if alive[b] && !alive[a] {
            on_ring[b] = true;
        }
    }
    (0..alive.len()).filter(|i| on_ring[*i]).collect()
}

/// Vertical distance from the bleb-diameter midpoint to the topmost
/// membrane point. The ring is the set of attached nodes with a
/// detached lattice neighbor; the diameter runs from the ring node
/// nearest `corner` to the one farthest from it.
pub fn bleb_extent(
    mem_positions: &[Vec3],
    alive: &[bool],
    edges: &[[usize; 2]],
    corner: Vec3,
) -> Option<f64> {
    let ring = ring_nodes(alive, edges);
    if ring.is_empty() {
        return None;
    }
    let dist = |i: usize| (mem_positions[i] - corner).norm();
    let near = *ring
        .iter()
        .min_by(|a, b| dist(**a).total_cmp(&dist(**b)))
        .expect("ring nonempty");
    let far = *ring
        .iter()
        .max_by(|a, b| dist(**a).total_cmp(&dist(**b)))
        .expect("ring nonempty");
    let mid = (mem_positions[near] + mem_positions[far]) * 0.5;
    let top = mem_positions
        .iter()
        .fold(f64::MIN, |acc, p| acc.max(p.z));
    Some(top - mid.z)
}

/// Runs equilibration followed by an optional bleb. The membrane and
/// cortex share the parameter nodes, so adhesion links pair nodes by
/// index. `w_sphere` holds unit-sphere weights for the node set.
pub fn run_bleb(
    cfg: &BlebConfig,
    points: &SpherePointSet,
    deg: usize,
    w_sphere: &QuadratureWeights,
    initiate: bool,
) -> Result<BlebRun> {
    let grid = EulerianGrid::new(cfg.half_width, cfg.eta, cfg.mu)?;
    let mut shell = ShvdShell::new(
        points,
        deg,
        points,
        w_sphere,
        &Sphere { radius: cfg.r_mem },
        cfg.material(),
    )?;
    let mut cortex = Cortex::sphere(points, cfg.r_cortex, cfg.k_cortex, cfg.xi)?;
    let mut alive = vec![true; points.n];
    let mut run = BlebRun::default();

    let step = |shell: &mut ShvdShell,
                cortex: &mut Cortex,
                alive: &[bool]|
     -> Result<f64> {
        let fe = shell.force_eval()?;
        let (adh_mem, adh_cortex) =
            adhesion_forces(&fe.positions, &cortex.positions, alive, cfg.k_adh, &shell.weights.w)?;
        let springs = cortex.spring_forces();
        let mem_total: Vec<Vec3> = fe
            .force
            .iter()
            .zip(&adh_mem)
            .map(|(a, b)| *a + *b)
            .collect();
        let cortex_total: Vec<Vec3> = springs
            .iter()
            .zip(&adh_cortex)
            .map(|(a, b)| *a + *b)
            .collect();
        let (u, _p, _net) = solve_with_contributions(
            &grid,
            &[(&fe.positions, &mem_total), (&cortex.positions, &cortex_total)],
            None,
        )?;
        let mem_vel = interpolate(&u, &shell.positions, &grid);
        let cortex_fluid_vel = interpolate(&u, &cortex.positions, &grid);
        let mut speed = 0.0_f64;
        for (x, v) in shell.positions.iter_mut().zip(&mem_vel) {
            *x += *v * cfg.dt;
            speed = speed.max(v.norm());
        }
        for i in 0..cortex.n() {
            let drift = cortex_total[i] * (1.0 / (cfg.xi * cortex.areas[i]));
            let v = cortex_fluid_vel[i] + drift;
            cortex.positions[i] += v * cfg.dt;
            speed = speed.max(v.norm());
        }
        Ok(speed)
    };

    let equil_steps = (cfg.t_equil / cfg.dt).round() as usize;
    let mut speed = 0.0;
    for _ in 0..equil_steps {
        speed = step(&mut shell, &mut cortex, &alive)?;
    }
    run.equil_speed = speed;

    if initiate {
        let cos_cap = cfg.bleb_angle.cos();
        for (i, u) in points.xyz.iter().enumerate() {
            if u.z >= cos_cap {
                alive[i] = false;
            }
        }
        run.detached = alive.iter().filter(|a| !**a).count();
        if run.detached == 0 {
            return Err(Error::InvalidInput(format!(
                "no node lies within {:.4} rad of the pole; the cap is unresolved at n = {}",
                cfg.bleb_angle, points.n
            )));
        }
    }

    let corner = Vec3::new(-cfg.half_width, -cfg.half_width, cfg.half_width);
    let edges = cortex.edges.clone();
    let extent0 = bleb_extent(&shell.positions, &alive, &edges, corner);
    run.ring = ring_nodes(&alive, &edges).len();

    let bleb_steps = (cfg.t_end / cfg.dt).round() as usize;
    let record = |run: &mut BlebRun, t: f64, speed: f64, shell: &ShvdShell| -> Result<()> {
        run.t.push(t);
        run.volume.push(shell.volume()?);
        run.max_speed.push(speed);
        if let (Some(e0), Some(e)) = (
            extent0,
            bleb_extent(&shell.positions, &alive, &edges, corner),
        ) {
            run.bleb_size.push(e - e0);
        }
        Ok(())
    };
    record(&mut run, 0.0, speed, &shell)?;
    for k in 0..bleb_steps {
        let s = step(&mut shell, &mut cortex, &alive)?;
        let t = (k + 1) as f64 * cfg.dt;
        if (k + 1) % cfg.sample_every == 0 || k + 1 == bleb_steps {
            record(&mut run, t, s, &shell)?;
        }
    }
    Ok(run)
}
