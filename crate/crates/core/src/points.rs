//! Node sets on the unit sphere.
//!
//! Surface quantities live at quasi-uniform unit-sphere nodes; both the
//! interpolation basis and the quadrature weights are built on top of a
//! [`SpherePointSet`]. Sets whose size is a perfect square (N+1)^2 carry
//! the harmonic degree N they can support.

use crate::error::{Error, Result};
use crate::harmonics::{harmonic_jet_row, harmonic_value_row};
use crate::linalg::LuSolver;
use crate::vec3::Vec3;
use std::f64::consts::PI;

/// Validated node set on the unit sphere. Longitudes lie in (-pi, pi],
/// latitudes in (-pi/2, pi/2]; `xyz` always agrees with (lambda, theta)
/// under (cos λ cos θ, sin λ cos θ, sin θ).
#[derive(Debug, Clone)]
pub struct SpherePointSet {
    pub n: usize,
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
    pub xyz: Vec<Vec3>,
    /// Harmonic degree N when n = (N+1)^2, otherwise None.
    pub degree: Option<usize>,
}

/// Result of normalizing an input direction: angles plus a flag noting
/// whether the input had to be rescaled onto the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalAngles {
    pub lambda: f64,
    pub theta: f64,
    pub normalized: bool,
}

/// Map a Cartesian direction to (longitude, latitude). Inputs off the
/// unit sphere by more than 1e-9 are normalized and flagged; the zero
/// vector has no direction and is rejected. Poles get longitude 0.
pub fn cartesian_to_spherical(p: Vec3) -> Result<SphericalAngles> {
    let r = p.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cannot assign spherical angles to vector of norm {r}"
        )));
    }
    let normalized = (r - 1.0).abs() > 1e-9;
    let u = p / r;
    let mut lambda = if u.x == 0.0 && u.y == 0.0 { 0.0 } else { u.y.atan2(u.x) };
    if lambda <= -PI {
        // atan2 can return -pi for y = -0.0; fold onto the half-open range
        lambda = PI;
    }
    let theta = u.z.clamp(-1.0, 1.0).asin();
    Ok(SphericalAngles { lambda, theta, normalized })
}

/// Inverse of [`cartesian_to_spherical`] on exact angles.
pub fn spherical_to_cartesian(lambda: f64, theta: f64) -> Vec3 {
    let (sl, cl) = lambda.sin_cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(cl * ct, sl * ct, st)
}

fn perfect_square_degree(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    if r >= 1 && r * r == n {
        Some(r - 1)
    } else {
        None
    }
}

impl SpherePointSet {
    /// Build a set from Cartesian directions. Each node is snapped to
    /// exact unit norm; inputs farther than `tol_off_sphere` from the
    /// sphere are rejected with the node index.
    pub fn from_cartesian(points: &[Vec3], tol_off_sphere: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty point set".into()));
        }
        let mut lambda = Vec::with_capacity(points.len());
        let mut theta = Vec::with_capacity(points.len());
        let mut xyz = Vec::with_capacity(points.len());
        for (i, &p) in points.iter().enumerate() {
            let r = p.norm();
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidInput(format!("node {i} has norm {r}")));
            }
            if (r - 1.0).abs() > tol_off_sphere {
                return Err(Error::OffSphere { index: i, dist: (r - 1.0).abs(), tol: tol_off_sphere });
            }
            let ang = cartesian_to_spherical(p)?;
            lambda.push(ang.lambda);
            theta.push(ang.theta);
            // store the exact image of the stored angles so both
            // representations agree to rounding
            xyz.push(spherical_to_cartesian(ang.lambda, ang.theta));
        }
        Ok(SpherePointSet {
            n: points.len(),
            lambda,
            theta,
            xyz,
            degree: perfect_square_degree(points.len()),
        })
    }

    /// Smallest chord distance between any two nodes. O(n^2); used by
    /// validation and tests, not in inner loops.
    pub fn min_pairwise_chord(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                best = best.min((self.xyz[i] - self.xyz[j]).norm());
            }
        }
        best
    }
}

/// Parse a point-set file: one node per line as "x y z", blank lines
/// and '#' comments ignored. Nodes farther than 1e-6 from the unit
/// sphere are rejected. A weight column, if present, is not read.
pub fn load_point_set(text: &str) -> Result<SpherePointSet> {
    let mut pts = Vec::new();
    let mut line_of_node = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut coord = [0.0_f64; 3];
        for c in coord.iter_mut() {
            let tok = it.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "expected three coordinates".into(),
            })?;
            *c = tok.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad coordinate {tok:?}: {e}"),
            })?;
        }
        pts.push(Vec3::from(coord));
        line_of_node.push(lineno + 1);
    }
    SpherePointSet::from_cartesian(&pts, 1e-6).map_err(|e| match e {
        // report the file line, not the node index
        Error::OffSphere { index, dist, tol } => Error::Parse {
            line: line_of_node[index],
            msg: format!("node is {dist:.3e} off the unit sphere (tolerance {tol:.1e})"),
        },
        other => other,
    })
}

/// Regular tetrahedron vertices, used as the minimal node set. No
/// vertex sits at a pole.
fn tetrahedron() -> Vec<Vec3> {
    let s = 1.0 / 3.0_f64.sqrt();
    vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ]
}

/// Quasi-uniform fallback nodes from a generalized spiral: latitudes at
/// midpoint offsets (never a pole), longitudes advanced by ~3.6/sqrt(n)
/// per band. Good enough to seed refinement or to run without a
/// published node file.
pub fn generate_fallback_points(n: usize) -> Result<SpherePointSet> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 nodes, got {n}")));
    }
    if n == 4 {
        return SpherePointSet::from_cartesian(&tetrahedron(), 1e-9);
    }
    let mut pts = Vec::with_capacity(n);
    let mut lam = 0.0_f64;
    for i in 0..n {
        let z = -1.0 + (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).sqrt();
        if i > 0 {
            lam += 3.6 / ((n as f64).sqrt() * r);
            lam %= 2.0 * PI;
        }
        pts.push(Vec3::new(lam.cos() * r, lam.sin() * r, z));
    }
    SpherePointSet::from_cartesian(&pts, 1e-9)
}

/// Spiral seed polished by Riesz-energy descent: the standard way to get
/// a well-conditioned interpolation set when no node file is supplied.
pub fn well_spread_points(n: usize, iterations: usize) -> Result<SpherePointSet> {
    refine_min_energy(&generate_fallback_points(n)?, iterations)
}

/// Spread nodes by descending their inverse-square (Riesz s = 2)
/// pairwise energy with tangential steps. Deterministic; used offline
/// to polish spiral seeds into well-conditioned interpolation sets.
pub fn refine_min_energy(set: &SpherePointSet, iterations: usize) -> Result<SpherePointSet> {
    let n = set.n;
    let mut p: Vec<Vec3> = set.xyz.clone();
    // step scale tied to the mean nearest-neighbor spacing squared
    let mut step = 1.0 / n as f64;
    let mut energy = riesz2_energy(&p);
    for _ in 0..iterations {
        let g = riesz2_gradient(&p);
        let trial: Vec<Vec3> = p
            .iter()
            .zip(&g)
            .map(|(&x, &gr)| {
                // tangential component only; the radial part is
                // removed by the renormalization anyway
                let t = gr - x * gr.dot(x);
                (x - t * step).normalized()
            })
            .collect();
        let e_trial = riesz2_energy(&trial);
        if e_trial < energy {
            p = trial;
            energy = e_trial;
            step *= 1.1;
        } else {
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
    }
    SpherePointSet::from_cartesian(&p, 1e-9)
}

/// Spiral seed, Riesz descent, then determinant ascent: the full offline
/// pipeline for an interpolation-grade node set of square size.
pub fn optimized_points(n: usize, riesz_iters: usize, det_iters: usize) -> Result<SpherePointSet> {
    let spread = well_spread_points(n, riesz_iters)?;
    if spread.degree.is_some() && n > 4 {
        polish_max_det(&spread, det_iters)
    } else {
        Ok(spread)
    }
}

/// Sharpen an (N+1)² node set for degree-N interpolation by gradient
/// ascent on ln |det Y|, the determinant of the square harmonic matrix.
/// Determinant-maximizing sets are the gold standard for this basis:
/// they bound the Lebesgue constant and keep square fits and quadrature
/// weights well conditioned, which Riesz-energy spreading alone does not
/// guarantee at higher degree.
pub fn polish_max_det(set: &SpherePointSet, iterations: usize) -> Result<SpherePointSet> {
    let n = set.n;
    let degree = set.degree.ok_or_else(|| {
        Error::InvalidInput(format!("determinant polish needs a square-size set, got n = {n}"))
    })?;
    let pole_cap = PI / 2.0 - 1e-6;
    let mut lam = set.lambda.clone();
    let mut th: Vec<f64> = set.theta.iter().map(|t| t.clamp(-pole_cap, pole_cap)).collect();
    let mut current = log_abs_det(degree, &lam, &th)?;
    // largest angular move per node per iteration, shrunk on failure
    let mut trust = 0.05_f64;
    for _ in 0..iterations {
        let rows: Result<Vec<_>> =
            (0..n).map(|i| harmonic_jet_row(degree, lam[i], th[i])).collect();
        let rows = rows?;
        let mut y = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            for (k, j) in row.iter().enumerate() {
                y[i * n + k] = j.v;
            }
        }
        let lu = LuSolver::new(n, &y);
        // d ln|det Y| / d(angle_i) = Σ_k (Y⁻¹)_{k,i} dY_{i,k}; column i of
        // the inverse against the derivative of row i.
        let identity: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        let inv_cols = lu.solve_many(&identity);
        let mut gl = vec![0.0; n];
        let mut gt = vec![0.0; n];
        let mut gmax = 0.0_f64;
        for i in 0..n {
            for (k, j) in rows[i].iter().enumerate() {
                gl[i] += inv_cols[i][k] * j.dl;
                gt[i] += inv_cols[i][k] * j.dt;
            }
            gmax = gmax.max(gl[i].abs()).max(gt[i].abs());
        }
        if gmax < 1e-12 {
            break;
        }
        let mut accepted = false;
        while trust > 1e-12 {
            let s = trust / gmax;
            let tl: Vec<f64> = (0..n).map(|i| wrap_longitude(lam[i] + s * gl[i])).collect();
            let tt: Vec<f64> =
                (0..n).map(|i| (th[i] + s * gt[i]).clamp(-pole_cap, pole_cap)).collect();
            let trial = log_abs_det(degree, &tl, &tt)?;
            if trial > current {
                lam = tl;
                th = tt;
                current = trial;
                trust = (trust * 1.3).min(0.2);
                accepted = true;
                break;
            }
            trust *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let pts: Vec<Vec3> =
        (0..n).map(|i| spherical_to_cartesian(lam[i], th[i])).collect();
    SpherePointSet::from_cartesian(&pts, 1e-9)
}

fn wrap_longitude(lam: f64) -> f64 {
    let mut v = (lam + PI).rem_euclid(2.0 * PI) - PI;
    if v <= -PI {
        v = PI;
    }
    v
}

fn log_abs_det(degree: usize, lam: &[f64], th: &[f64]) -> Result<f64> {
    let n = lam.len();
    let mut y = vec![0.0; n * n];
    for i in 0..n {
        let row = harmonic_value_row(degree, lam[i], th[i]);
        y[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    Ok(LuSolver::new(n, &y).log_abs_det())
}

fn riesz2_energy(p: &[Vec3]) -> f64 {
    let n = p.len();
    let mut e = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            e += 1.0 / (p[i] - p[j]).norm_sq();
        }
    }
    e
}

fn riesz2_gradient(p: &[Vec3]) -> Vec<Vec3> {
    let n = p.len();
    let mut g = vec![Vec3::default(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = p[i] - p[j];
            let r2 = d.norm_sq();
            // d/dx_i of 1/r^2 = -2 (x_i - x_j) / r^4
            let f = d * (-2.0 / (r2 * r2));
            g[i] += f;
            g[j] -= f;
        }
    }
    g
}
