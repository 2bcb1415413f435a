//! Area weights for surface quadrature.
//!
//! Weights on the unit sphere come from the nonnegative least-squares
//! system that forces every harmonic through degree N to integrate
//! exactly (the constant to √(4π)·Y₀⁰ = 4π, the rest to zero). Weights
//! for a deformed reference surface are the sphere weights scaled by
//! the local area ratio of the two parameterizations.
//!
//! Weights are computed once per (point set, degree, reference) at
//! setup; nothing in the time loop recomputes them.

use crate::error::{Error, Result};
use crate::harmonics::{basis_size, harmonic_value_row, SurfaceJet};
use crate::nnls::nnls_solve;
use crate::points::SpherePointSet;
use crate::vec3::Vec3;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct QuadratureWeights {
    pub w: Vec<f64>,
    /// NNLS residual of the exactness system (unit-sphere solve).
    pub residual: f64,
    /// Exactness degree N.
    pub degree: usize,
    /// Set when the residual exceeds 1e-6: the node set cannot carry
    /// degree-N quadrature to full accuracy.
    pub poor_point_set: bool,
}

impl QuadratureWeights {
    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Nonnegative degree-N weights on the unit sphere for `points`.
pub fn unit_sphere_weights(points: &SpherePointSet, n_deg: usize) -> Result<QuadratureWeights> {
    let m = basis_size(n_deg);
    let n = points.n;
    if n < m {
        return Err(Error::InvalidInput(format!(
            "degree {n_deg} exactness needs at least {m} nodes, point set has {n}"
        )));
    }
    // rows: harmonics (l,k); columns: nodes. This is the transpose of
    // the interpolation matrix; real basis, so no conjugation.
    let mut a = vec![0.0; m * n];
    for j in 0..n {
        let col = harmonic_value_row(n_deg, points.lambda[j], points.theta[j]);
        for (i, v) in col.iter().enumerate() {
            a[i * n + j] = *v;
        }
    }
    let mut b = vec![0.0; m];
    b[0] = (4.0 * PI).sqrt();
    let sol = nnls_solve(m, n, &a, &b)?;
    Ok(QuadratureWeights {
        poor_point_set: sol.residual > 1e-6,
        w: sol.x,
        residual: sol.residual,
        degree: n_deg,
    })
}

/// Determinant of the first fundamental form from a surface jet.
pub fn first_form_det(j: &SurfaceJet) -> f64 {
    let e = j.xl.dot(j.xl);
    let f = j.xl.dot(j.xt);
    let g = j.xt.dot(j.xt);
    e * g - f * f
}

/// Transfer unit-sphere weights to a reference surface given its jets
/// at the same nodes: w_i <- sqrt(det G0(Z_i) / cos²θ_i) · w_i, the
/// area-element ratio of the two maps.
pub fn reference_weights(
    points: &SpherePointSet,
    w_sphere: &QuadratureWeights,
    ref_jets: &[SurfaceJet],
) -> Result<QuadratureWeights> {
    if ref_jets.len() != points.n || w_sphere.n() != points.n {
        return Err(Error::InvalidInput(format!(
            "weights ({}), jets ({}) and nodes ({}) disagree",
            w_sphere.n(),
            ref_jets.len(),
            points.n
        )));
    }
    let mut w = Vec::with_capacity(points.n);
    for i in 0..points.n {
        let det_ref = first_form_det(&ref_jets[i]);
        if !(det_ref > 0.0) {
            return Err(Error::DegenerateSurface { index: i, det: det_ref });
        }
        let det_sphere = points.theta[i].cos().powi(2);
        w.push((det_ref / det_sphere).sqrt() * w_sphere.w[i]);
    }
    Ok(QuadratureWeights {
        w,
        residual: w_sphere.residual,
        degree: w_sphere.degree,
        poor_point_set: w_sphere.poor_point_set,
    })
}

pub fn integrate_scalar(values: &[f64], w: &QuadratureWeights) -> f64 {
    assert_eq!(values.len(), w.n(), "value/weight length mismatch");
    values.iter().zip(&w.w).map(|(v, wi)| v * wi).sum()
}

pub fn integrate_vec3(values: &[Vec3], w: &QuadratureWeights) -> Vec3 {
    assert_eq!(values.len(), w.n(), "value/weight length mismatch");
    let mut s = Vec3::default();
    for (v, wi) in values.iter().zip(&w.w) {
        s += *v * *wi;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::eval_harmonic;
    use crate::points::generate_fallback_points;

    #[test]
    fn tetrahedron_weights_are_quarter_sphere() {
        let pts = generate_fallback_points(4).unwrap();
        let w = unit_sphere_weights(&pts, 1).unwrap();
        for (i, wi) in w.w.iter().enumerate() {
            assert!((wi - PI).abs() < 1e-12, "weight {i} = {wi}, want π");
        }
        assert!(w.residual < 1e-12);
        assert!(!w.poor_point_set);
    }

    #[test]
    fn wide_system_weights_integrate_low_harmonics() {
        // more nodes than exactness conditions: residual ~ 0
        let pts = generate_fallback_points(140).unwrap();
        let w = unit_sphere_weights(&pts, 7).unwrap();
        assert!(w.residual < 1e-9, "residual {}", w.residual);
        assert!((w.total() - 4.0 * PI).abs() < 1e-9);
        for l in 1..=7usize {
            for k in -(l as isize)..=(l as isize) {
                let vals: Vec<f64> = (0..pts.n)
                    .map(|i| eval_harmonic(l, k, pts.lambda[i], pts.theta[i]).unwrap())
                    .collect();
                let s = integrate_scalar(&vals, &w);
                assert!(s.abs() < 1e-9, "Y({l},{k}) integrates to {s}");
            }
        }
    }

    #[test]
    fn degree_two_polynomial_is_exact() {
        let pts = generate_fallback_points(140).unwrap();
        let w = unit_sphere_weights(&pts, 7).unwrap();
        let vals: Vec<f64> = pts.xyz.iter().map(|p| p.x * p.x).collect();
        let s = integrate_scalar(&vals, &w);
        assert!((s - 4.0 * PI / 3.0).abs() < 1e-9, "∫x² = {s}");
    }

    #[test]
    fn sphere_scaling_multiplies_weights_by_r_squared() {
        let pts = generate_fallback_points(60).unwrap();
        let w = unit_sphere_weights(&pts, 5).unwrap();
        let r = 2.5_f64;
        // jets of the radius-r sphere map at each node
        let jets: Vec<SurfaceJet> = (0..pts.n)
            .map(|i| {
                let (lam, th) = (pts.lambda[i], pts.theta[i]);
                let (sl, cl) = lam.sin_cos();
                let (st, ct) = th.sin_cos();
                SurfaceJet {
                    x: Vec3::new(cl * ct, sl * ct, st) * r,
                    xl: Vec3::new(-sl * ct, cl * ct, 0.0) * r,
                    xt: Vec3::new(-cl * st, -sl * st, ct) * r,
                    ..Default::default()
                }
            })
            .collect();
        let wr = reference_weights(&pts, &w, &jets).unwrap();
        for i in 0..pts.n {
            assert!((wr.w[i] - r * r * w.w[i]).abs() < 1e-12 * r * r);
        }
        // composing two scalings multiplies the factors
        let jets4: Vec<SurfaceJet> = jets
            .iter()
            .map(|j| SurfaceJet { x: j.x * 2.0, xl: j.xl * 2.0, xt: j.xt * 2.0, ..Default::default() })
            .collect();
        let wr4 = reference_weights(&pts, &w, &jets4).unwrap();
        for i in 0..pts.n {
            assert!((wr4.w[i] - 4.0 * r * r * w.w[i]).abs() < 1e-11 * r * r);
        }
    }

    #[test]
    fn degenerate_reference_is_reported_with_node() {
        let pts = generate_fallback_points(16).unwrap();
        let w = unit_sphere_weights(&pts, 3).unwrap();
        let mut jets: Vec<SurfaceJet> = (0..pts.n)
            .map(|i| {
                let (lam, th) = (pts.lambda[i], pts.theta[i]);
                let (sl, cl) = lam.sin_cos();
                let (st, ct) = th.sin_cos();
                SurfaceJet {
                    x: Vec3::new(cl * ct, sl * ct, st),
                    xl: Vec3::new(-sl * ct, cl * ct, 0.0),
                    xt: Vec3::new(-cl * st, -sl * st, ct),
                    ..Default::default()
                }
            })
            .collect();
        jets[7].xl = Vec3::default(); // collapse one tangent
        match reference_weights(&pts, &w, &jets) {
            Err(Error::DegenerateSurface { index, .. }) => assert_eq!(index, 7),
            other => panic!("expected degenerate-surface error, got {other:?}"),
        }
    }

    #[test]
    fn integrate_handles_scalars_and_vectors() {
        let pts = generate_fallback_points(60).unwrap();
        let w = unit_sphere_weights(&pts, 5).unwrap();
        let ones = vec![1.0; pts.n];
        assert!((integrate_scalar(&ones, &w) - 4.0 * PI).abs() < 1e-10);
        let y32: Vec<f64> = (0..pts.n)
            .map(|i| eval_harmonic(3, 2, pts.lambda[i], pts.theta[i]).unwrap())
            .collect();
        assert!(integrate_scalar(&y32, &w).abs() < 1e-10);
        let vecs: Vec<Vec3> = pts.xyz.to_vec();
        // odd components integrate to zero by symmetry of the weights system
        let s = integrate_vec3(&vecs, &w);
        assert!(s.norm() < 1e-9, "∮ n dA = {s:?}");
    }
}
