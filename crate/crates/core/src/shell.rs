//! Variational membrane force densities on spherical-topology shells.
//!
//! The in-plane force density is the divergence form
//!
//! ```text
//! F = (1/√det G0) [ ∂λ(√det G0 (S11 Xλ + S12 Xθ))
//!                 + ∂θ(√det G0 (S21 Xλ + S22 Xθ)) ],
//! S = 2 W1 G0⁻¹ + 2 W2 det(C) G⁻¹,
//! ```
//!
//! expanded here by exact chain rule on second-order jets of the current
//! and reference maps. No finite differences and no extra spectral
//! differentiation enter, so surfaces represented exactly by the
//! interpolant get exact densities.

use crate::error::{Error, Result};
use crate::geometry::{
    curvature, det_derivative, first_form, metric_jet, surface_laplacian, surface_laplacian_at,
    unit_normal,
};
use crate::harmonics::{HarmonicBasis, ShellInterpolant, SurfaceJet};
use crate::material::ElasticMaterial;
use crate::quadrature::QuadratureWeights;
use crate::vec3::{Sym2, Vec3};

/// Second Piola–Kirchhoff tensor from a metric pair and energy partials
/// (symmetric by construction).
pub fn second_pk(g: Sym2, g0: Sym2, w1: f64, w2: f64) -> Sym2 {
    let det_c = g.det() / g0.det();
    g0.inverse().scale(2.0 * w1).add(g.inverse().scale(2.0 * w2 * det_c))
}

/// In-plane (neo-Hookean + surface tension) force density per unit
/// reference area at one node, by exact differentiation of the
/// divergence form. `node` labels errors.
pub fn vd_force_density(
    jx: &SurfaceJet,
    jz: &SurfaceJet,
    material: &ElasticMaterial,
    node: usize,
) -> Result<Vec3> {
    let mx = metric_jet(jx);
    let mz = metric_jet(jz);

    let det0 = mz.g.det();
    if det0 <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det: det0 });
    }
    let det = mx.g.det();
    if det <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det });
    }

    let det_l = det_derivative(mx.g, mx.gl);
    let det_t = det_derivative(mx.g, mx.gt);
    let det0_l = det_derivative(mz.g, mz.gl);
    let det0_t = det_derivative(mz.g, mz.gt);

    let sqrt0 = det0.sqrt();
    let sqrt0_l = det0_l / (2.0 * sqrt0);
    let sqrt0_t = det0_t / (2.0 * sqrt0);

    let ginv = mx.g.inverse();
    let g0inv = mz.g.inverse();
    // d(A⁻¹) = −A⁻¹ dA A⁻¹
    let ginv_l = ginv.sandwich(mx.gl).scale(-1.0);
    let ginv_t = ginv.sandwich(mx.gt).scale(-1.0);
    let g0inv_l = g0inv.sandwich(mz.gl).scale(-1.0);
    let g0inv_t = g0inv.sandwich(mz.gt).scale(-1.0);

    let i1 = mx.g.trace_product(g0inv) - 2.0;
    let i1_l = mx.gl.trace_product(g0inv) + mx.g.trace_product(g0inv_l);
    let i1_t = mx.gt.trace_product(g0inv) + mx.g.trace_product(g0inv_t);

    let det_c = det / det0;
    let i2 = det_c - 1.0;
    let i2_l = (det_l * det0 - det * det0_l) / (det0 * det0);
    let i2_t = (det_t * det0 - det * det0_t) / (det0 * det0);

    let p = material.partials(i1, i2)?;

    let s = g0inv.scale(2.0 * p.w1).add(ginv.scale(2.0 * p.w2 * det_c));
    // dS = 2 dW1 G0⁻¹ + 2 W1 dG0⁻¹ + 2 (dW2 detC + W2 d(detC)) G⁻¹
    //    + 2 W2 detC dG⁻¹, with d(detC) = dI2.
    let w1_l = p.w11 * i1_l + p.w12 * i2_l;
    let w1_t = p.w11 * i1_t + p.w12 * i2_t;
    let w2_l = p.w12 * i1_l + p.w22 * i2_l;
    let w2_t = p.w12 * i1_t + p.w22 * i2_t;
    let s_l = g0inv_l
        .scale(2.0 * p.w1)
        .add(g0inv.scale(2.0 * w1_l))
        .add(ginv_l.scale(2.0 * p.w2 * det_c))
        .add(ginv.scale(2.0 * (w2_l * det_c + p.w2 * i2_l)));
    let s_t = g0inv_t
        .scale(2.0 * p.w1)
        .add(g0inv.scale(2.0 * w1_t))
        .add(ginv_t.scale(2.0 * p.w2 * det_c))
        .add(ginv.scale(2.0 * (w2_t * det_c + p.w2 * i2_t)));

    // ∂λ(√det G0 (S11 Xλ + S12 Xθ)) + ∂θ(√det G0 (S12 Xλ + S22 Xθ))
    let flux_l = jx.xl * s.a11 + jx.xt * s.a12;
    let flux_t = jx.xl * s.a12 + jx.xt * s.a22;
    let div_l = flux_l * sqrt0_l
        + (jx.xl * s_l.a11 + jx.xll * s.a11 + jx.xt * s_l.a12 + jx.xlt * s.a12) * sqrt0;
    let div_t = flux_t * sqrt0_t
        + (jx.xl * s_t.a12 + jx.xlt * s.a12 + jx.xt * s_t.a22 + jx.xtt * s.a22) * sqrt0;

    Ok((div_l + div_t) * (1.0 / sqrt0))
}

/// In-plane densities at every node of aligned jet arrays.
pub fn vd_force_densities(
    jets_x: &[SurfaceJet],
    jets_z: &[SurfaceJet],
    material: &ElasticMaterial,
) -> Result<Vec<Vec3>> {
    if jets_x.len() != jets_z.len() {
        return Err(Error::InvalidInput(format!(
            "jet arrays disagree: {} current vs {} reference",
            jets_x.len(),
            jets_z.len()
        )));
    }
    jets_x
        .iter()
        .zip(jets_z)
        .enumerate()
        .map(|(i, (jx, jz))| vd_force_density(jx, jz, material, i))
        .collect()
}

/// Energy density W(I1, I2) at one node, per unit reference area.
pub fn energy_density(
    jx: &SurfaceJet,
    jz: &SurfaceJet,
    material: &ElasticMaterial,
    node: usize,
) -> Result<f64> {
    let g = first_form(jx);
    let g0 = first_form(jz);
    let det0 = g0.det();
    if det0 <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det: det0 });
    }
    let g0inv = g0.inverse();
    let i1 = g.trace_product(g0inv) - 2.0;
    let i2 = g.det() / det0 - 1.0;
    Ok(material.partials(i1, i2)?.w)
}

/// Surface-tension force density in curvature form,
/// σ(2H) n̂ √(det G / det G0): an independent route to the same physics
/// as `vd_force_density` with a tension-only material.
pub fn surface_tension_curvature_density(
    jx: &SurfaceJet,
    jz: &SurfaceJet,
    sigma: f64,
    node: usize,
) -> Result<Vec3> {
    let cd = curvature(jx, node)?;
    let det0 = first_form(jz).det();
    if det0 <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det: det0 });
    }
    let ratio = (cd.first.det() / det0).sqrt();
    Ok(cd.n_hat * (sigma * 2.0 * cd.h * ratio))
}

/// Bending force density field and the spectral-resolution diagnostics
/// of its curvature expansion.
#[derive(Debug, Clone)]
pub struct BendingField {
    pub density: Vec<Vec3>,
    pub max_residual: f64,
    pub under_resolved: bool,
}

/// Bending force density −k_bend √(det G/det G0)(4∇²ₛH + 8H³ − 4HR) n̂
/// at the basis nodes. The mean-curvature field is expanded in the same
/// harmonic basis as the surface itself.
pub fn bending_density(
    jets_x: &[SurfaceJet],
    jets_z: &[SurfaceJet],
    k_bend: f64,
    basis: &HarmonicBasis,
) -> Result<BendingField> {
    let m = basis.m();
    if jets_x.len() != m || jets_z.len() != m {
        return Err(Error::InvalidInput(format!(
            "bending needs jets at all {m} basis nodes, got {} and {}",
            jets_x.len(),
            jets_z.len()
        )));
    }
    let mut curvatures = Vec::with_capacity(m);
    let mut h_field = vec![0.0; m];
    for (i, jx) in jets_x.iter().enumerate() {
        let cd = curvature(jx, i)?;
        h_field[i] = cd.h;
        curvatures.push(cd);
    }
    let lap = surface_laplacian(&h_field, jets_x, basis)?;
    let mut density = Vec::with_capacity(m);
    for i in 0..m {
        let cd = &curvatures[i];
        let det0 = first_form(&jets_z[i]).det();
        if det0 <= 1e-14 {
            return Err(Error::DegenerateSurface { index: i, det: det0 });
        }
        let ratio = (cd.first.det() / det0).sqrt();
        let scalar = -k_bend * ratio * (4.0 * lap.values[i] + 8.0 * cd.h.powi(3) - 4.0 * cd.h * cd.r);
        density.push(cd.n_hat * scalar);
    }
    Ok(BendingField {
        density,
        max_residual: lap.max_residual,
        under_resolved: lap.under_resolved,
    })
}

/// Bending force density at arbitrary evaluation nodes of a fitted
/// surface. Curvature enters pointwise from the evaluation jets; the
/// mean-curvature field feeding ∇²ₛH is sampled at the basis nodes,
/// expanded there, and differentiated at the targets.
pub fn bending_density_at(
    interp: &ShellInterpolant,
    basis: &HarmonicBasis,
    jets_x: &[SurfaceJet],
    jets_z: &[SurfaceJet],
    lambda: &[f64],
    theta: &[f64],
    k_bend: f64,
) -> Result<BendingField> {
    let n = jets_x.len();
    if jets_z.len() != n || lambda.len() != n || theta.len() != n {
        return Err(Error::InvalidInput(format!(
            "bending eval arrays disagree: {} current jets, {} reference jets, {} nodes",
            n,
            jets_z.len(),
            lambda.len()
        )));
    }
    let jets_basis = interp.jets(&basis.points.lambda, &basis.points.theta)?;
    let mut h_field = vec![0.0; basis.m()];
    for (i, j) in jets_basis.iter().enumerate() {
        h_field[i] = curvature(j, i)?.h;
    }
    let lap = surface_laplacian_at(&h_field, basis, jets_x, lambda, theta)?;
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let cd = curvature(&jets_x[i], i)?;
        let det0 = first_form(&jets_z[i]).det();
        if det0 <= 1e-14 {
            return Err(Error::DegenerateSurface { index: i, det: det0 });
        }
        let ratio = (cd.first.det() / det0).sqrt();
        let scalar = -k_bend * ratio * (4.0 * lap.values[i] + 8.0 * cd.h.powi(3) - 4.0 * cd.h * cd.r);
        density.push(cd.n_hat * scalar);
    }
    Ok(BendingField {
        density,
        max_residual: lap.max_residual,
        under_resolved: lap.under_resolved,
    })
}

/// Nodal densities with the forces they integrate to.
#[derive(Debug, Clone)]
pub struct ForceField {
    /// Force per unit reference area.
    pub density: Vec<Vec3>,
    /// density × nodal area weight.
    pub force: Vec<Vec3>,
}

impl ForceField {
    pub fn total_force(&self) -> Vec3 {
        self.force.iter().fold(Vec3::zero(), |a, f| a + *f)
    }

    pub fn max_force_abs(&self) -> f64 {
        self.force.iter().fold(0.0, |a, f| a.max(f.max_abs()))
    }
}

/// Multiplies densities by nodal reference-area weights.
pub fn density_to_force(density: &[Vec3], weights: &QuadratureWeights) -> Result<ForceField> {
    if density.len() != weights.n() {
        return Err(Error::InvalidInput(format!(
            "{} densities vs {} weights",
            density.len(),
            weights.n()
        )));
    }
    let force: Vec<Vec3> = density.iter().zip(&weights.w).map(|(d, w)| *d * *w).collect();
    Ok(ForceField { density: density.to_vec(), force })
}

/// ℓ∞ error between two nodal force fields: the largest absolute
/// component difference over all nodes.
pub fn linf_error(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((*x - *y).max_abs()))
}

/// Unit normal of the current configuration at one node (re-export used
/// by scenario code alongside the densities above).
pub fn node_normal(jx: &SurfaceJet, node: usize) -> Result<Vec3> {
    unit_normal(jx, node)
}
