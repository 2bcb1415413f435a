//! Ellipsoid relaxation: a stretched shell with a spherical rest shape
//! contracts back under combined stretching and tension forces.
//!
//! The shell starts on the volume-preserving ellipsoid
//! (a, 1/√a, 1/√a) with the unit sphere as reference. Two displacement
//! metrics are tracked: the largest node distance from the centroid
//! minus the rest radius, and the x-excursion of the point that starts
//! at the +x tip (used by the grid-refinement study, where consecutive
//! resolutions are differenced).

use crate::error::Result;
use crate::fluid::EulerianGrid;
use crate::material::ElasticMaterial;
use crate::points::SpherePointSet;
use crate::quadrature::QuadratureWeights;
use crate::shapes::{Ellipsoid, ReferenceShape, Sphere};
use crate::sim::{
    centroid, max_radial_displacement, step_ldsm, step_shvd, LdsmShell, ShvdShell,
};
use crate::vec3::Vec3;

/// Parameters of one relaxation run. Defaults follow the standard
/// setup: unit moduli, a 4x4x4 box, dt = 1/(2η), three seconds.
#[derive(Debug, Clone)]
pub struct RelaxConfig {
    pub eta: usize,
    pub half_width: f64,
    pub mu: f64,
    /// Long semi-axis of the initial ellipsoid; the others are 1/√a.
    pub a: f64,
    pub material: ElasticMaterial,
    pub dt: f64,
    pub t_end: f64,
    /// Record the metrics every this many steps (and always at the end).
    pub sample_every: usize,
}

impl RelaxConfig {
    pub fn with_eta(eta: usize) -> Self {
        let mut m = ElasticMaterial::neo_hookean(1.0, 1.0);
        m.tension = 1.0;
        RelaxConfig {
            eta,
            half_width: 2.0,
            mu: 1.0,
            a: 1.2,
            material: m,
            dt: 1.0 / (2.0 * eta as f64),
            t_end: 3.0,
            sample_every: 4,
        }
    }
}

/// Time series of the two displacement metrics.
#[derive(Debug, Clone, Default)]
pub struct RelaxSeries {
    pub t: Vec<f64>,
    /// max_i |X_i - centroid| - 1.
    pub d_max: Vec<f64>,
    /// x of the initially rightmost point minus centroid x, change from
    /// the start.
    pub tip: Vec<f64>,
}

fn record_shvd(series: &mut RelaxSeries, t: f64, shell: &ShvdShell, tip0: f64) -> Result<()> {
    let interp = shell.fit()?;
    let jets = interp.jets(&shell.eval.lambda, &shell.eval.theta)?;
    let pts: Vec<Vec3> = jets.iter().map(|j| j.x).collect();
    let c = centroid(&pts);
    // The +x tip of the initial ellipsoid is the (λ, θ) = (0, 0) node.
    let tip = interp.position(0.0, 0.0).x - c.x;
    series.t.push(t);
    series.d_max.push(max_radial_displacement(&pts, 1.0));
    series.tip.push(tip - tip0);
    Ok(())
}

/// Runs the relaxation with the harmonic shell. `w_sphere` holds
/// unit-sphere weights for the evaluation set.
pub fn run_relax_shvd(
    cfg: &RelaxConfig,
    interp: &SpherePointSet,
    interp_deg: usize,
    eval: &SpherePointSet,
    w_sphere: &QuadratureWeights,
) -> Result<RelaxSeries> {
    let shape = Ellipsoid { a: cfg.a, b: 1.0 / cfg.a.sqrt(), c: 1.0 / cfg.a.sqrt() };
    let sphere = Sphere { radius: 1.0 };
    let mut shell = ShvdShell::new(interp, interp_deg, eval, w_sphere, &sphere, cfg.material)?;
    for (i, x) in shell.positions.iter_mut().enumerate() {
        *x = shape.position(interp.lambda[i], interp.theta[i]);
    }
    let grid = EulerianGrid::new(cfg.half_width, cfg.eta, cfg.mu)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut series = RelaxSeries::default();
    record_shvd(&mut series, 0.0, &shell, 0.0)?;
    let tip0 = series.tip[0];
    series.tip[0] = 0.0;
    for k in 0..steps {
        step_shvd(&mut shell, &grid, cfg.dt)?;
        let t = (k + 1) as f64 * cfg.dt;
        if (k + 1) % cfg.sample_every == 0 || k + 1 == steps {
            record_shvd(&mut series, t, &shell, tip0)?;
        }
    }
    Ok(series)
}

fn record_ldsm(series: &mut RelaxSeries, t: f64, shell: &LdsmShell, tip_node: usize, tip0: f64) {
    let pts = &shell.mesh.verts;
    let c = centroid(pts);
    series.t.push(t);
    series.d_max.push(max_radial_displacement(pts, 1.0));
    series.tip.push(pts[tip_node].x - c.x - tip0);
}

/// Runs the relaxation with the triangulated shell on the same nodes
/// the harmonic run evaluates at.
pub fn run_relax_ldsm(cfg: &RelaxConfig, points: &SpherePointSet) -> Result<RelaxSeries> {
    let shape = Ellipsoid { a: cfg.a, b: 1.0 / cfg.a.sqrt(), c: 1.0 / cfg.a.sqrt() };
    let reference: Vec<Vec3> = points.xyz.clone();
    let current: Vec<Vec3> = (0..points.n)
        .map(|i| shape.position(points.lambda[i], points.theta[i]))
        .collect();
    let tip_node = current
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.x.total_cmp(&b.1.x))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut shell = LdsmShell::new(current, reference, cfg.material)?;
    let grid = EulerianGrid::new(cfg.half_width, cfg.eta, cfg.mu)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut series = RelaxSeries::default();
    record_ldsm(&mut series, 0.0, &shell, tip_node, 0.0);
    let tip0 = series.tip[0];
    series.tip[0] = 0.0;
    for k in 0..steps {
        step_ldsm(&mut shell, &grid, cfg.dt)?;
        let t = (k + 1) as f64 * cfg.dt;
        if (k + 1) % cfg.sample_every == 0 || k + 1 == steps {
            record_ldsm(&mut series, t, &shell, tip_node, tip0);
        }
    }
    Ok(series)
}
