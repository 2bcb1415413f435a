//! Linear discrete surface method: a triangulated shell whose energy is
//! integrated exactly before differentiation.
//!
//! Strain is constant per triangle, so the discrete energy is a finite
//! sum (1/2)·Σ W(t,s)·√det G0(s) and vertex forces are its exact
//! gradients. Force balance therefore holds to machine precision per
//! triangle, independent of any quadrature rule.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hull::convex_hull;
use crate::material::ElasticMaterial;
use crate::vec3::{Sym2, Vec3};

/// Closed triangulated shell with fixed connectivity. `verts` deform
/// during a run; `ref_verts` and `tris` are set once at initialization.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub verts: Vec<Vec3>,
    pub ref_verts: Vec<Vec3>,
    /// Vertex-index triples, consistently oriented outward.
    pub tris: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Checks the closed-manifold invariants: positive reference areas,
    /// every edge shared by exactly two triangles, every vertex used by
    /// at least three.
    pub fn validate(&self) -> Result<()> {
        if self.verts.len() != self.ref_verts.len() {
            return Err(Error::InvalidInput(format!(
                "mesh has {} current but {} reference vertices",
                self.verts.len(),
                self.ref_verts.len()
            )));
        }
        let mut degree = vec![0usize; self.ref_verts.len()];
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.tris.iter().enumerate() {
            let area = triangle_area(&self.ref_verts, tri);
            if area < 1e-14 {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
            for k in 0..3 {
                degree[tri[k]] += 1;
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if let Some((e, c)) = edges.iter().find(|(_, c)| **c != 2) {
            return Err(Error::Triangulation(format!(
                "edge ({}, {}) belongs to {c} triangles; a closed surface needs 2",
                e.0, e.1
            )));
        }
        if let Some(i) = degree.iter().position(|d| *d < 3) {
            return Err(Error::Triangulation(format!(
                "vertex {i} belongs to {} triangles; need at least 3",
                degree[i]
            )));
        }
        Ok(())
    }
}

fn triangle_area(verts: &[Vec3], tri: &[usize; 3]) -> f64 {
    let d1 = verts[tri[0]] - verts[tri[2]];
    let d2 = verts[tri[1]] - verts[tri[2]];
    0.5 * d1.cross(d2).norm()
}

/// Connects `points` on a closed star-shaped surface into an outward
/// oriented triangulation: project onto the unit sphere about the
/// centroid and take the convex hull of the projections. Both `verts`
/// and `ref_verts` start as `points`.
pub fn triangulate(points: &[Vec3]) -> Result<TriMesh> {
    let n = points.len();
    if n < 4 {
        return Err(Error::Triangulation(format!("need at least 4 points, got {n}")));
    }
    let centroid = points.iter().fold(Vec3::zero(), |a, p| a + *p) * (1.0 / n as f64);
    let mut dirs = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let r = *p - centroid;
        let len = r.norm();
        if len < 1e-12 {
            return Err(Error::Triangulation(format!("point {i} coincides with the centroid")));
        }
        dirs.push(r * (1.0 / len));
    }
    let tris = convex_hull(&dirs)?;
    // A surface star-shaped about the centroid projects injectively, so
    // every point is a hull vertex; a missing one means two points share
    // a ray from the centroid.
    let mut used = vec![false; n];
    for tri in &tris {
        for &v in tri {
            used[v] = true;
        }
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::Triangulation(format!(
            "point {i} is not on the spherical projection hull; the surface is not star-shaped about its centroid"
        )));
    }
    let mesh = TriMesh { verts: points.to_vec(), ref_verts: points.to_vec(), tris };
    mesh.validate()?;
    Ok(mesh)
}

/// Per-vertex area weights: one third of the incident reference
/// triangle areas. Summing over vertices counts each triangle three
/// times at 1/3, so Σ wᵢ equals the total reference area exactly.
pub fn ldsm_area_weights(mesh: &TriMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.ref_verts.len()];
    for tri in &mesh.tris {
        let share = triangle_area(&mesh.ref_verts, tri) / 3.0;
        for &v in tri {
            w[v] += share;
        }
    }
    w
}

/// Vertex forces of the exactly integrated discrete energy
/// (1/2)·Σ W(t,s)·√det G0(s).
///
/// Per triangle with edge matrix D = [X¹−X³ | X²−X³] the gradient with
/// respect to D is (1/2)√det G0 · D·S with S = 2W₁G0⁻¹ + 2W₂ det C·G⁻¹,
/// and the third vertex takes minus the sum of the first two, so each
/// triangle balances exactly.
pub fn ldsm_forces(mesh: &TriMesh, material: &ElasticMaterial) -> Result<Vec<Vec3>> {
    if material.bending != 0.0 {
        return Err(Error::InvalidInput(
            "bending is not defined for the triangulated method; set the bending modulus to zero"
                .into(),
        ));
    }
    material.validate()?;
    let mut forces = vec![Vec3::zero(); mesh.verts.len()];
    for (t, tri) in mesh.tris.iter().enumerate() {
        let d1 = mesh.verts[tri[0]] - mesh.verts[tri[2]];
        let d2 = mesh.verts[tri[1]] - mesh.verts[tri[2]];
        let e1 = mesh.ref_verts[tri[0]] - mesh.ref_verts[tri[2]];
        let e2 = mesh.ref_verts[tri[1]] - mesh.ref_verts[tri[2]];
        let g = Sym2::new(d1.dot(d1), d1.dot(d2), d2.dot(d2));
        let g0 = Sym2::new(e1.dot(e1), e1.dot(e2), e2.dot(e2));
        let det_g = g.det();
        let det_g0 = g0.det();
        // det G = |d1 × d2|², so the area test is a determinant test.
        if det_g.sqrt() * 0.5 < 1e-14 {
            return Err(Error::DegenerateTriangle { index: t, area: det_g.max(0.0).sqrt() * 0.5 });
        }
        if det_g0.sqrt() * 0.5 < 1e-14 {
            return Err(Error::DegenerateTriangle { index: t, area: det_g0.max(0.0).sqrt() * 0.5 });
        }
        let det_c = det_g / det_g0;
        let i1 = g.trace_product(g0.inverse()) - 2.0;
        let i2 = det_c - 1.0;
        let p = material.partials(i1, i2)?;
        let s = g0.inverse().scale(2.0 * p.w1).add(g.inverse().scale(2.0 * p.w2 * det_c));
        let a0 = 0.5 * det_g0.sqrt();
        let f1 = (d1 * s.a11 + d2 * s.a12) * -a0;
        let f2 = (d1 * s.a12 + d2 * s.a22) * -a0;
        forces[tri[0]] += f1;
        forces[tri[1]] += f2;
        forces[tri[2]] -= f1 + f2;
    }
    Ok(forces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::generate_fallback_points;
    use crate::shapes::{Ellipsoid, ReferenceShape};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sphere_mesh(n: usize) -> TriMesh {
        let pts = generate_fallback_points(n).unwrap();
        triangulate(&pts.xyz).unwrap()
    }

    /// Deform a unit-sphere mesh onto an ellipsoid, keeping the sphere
    /// as the reference.
    fn deformed_mesh(n: usize, a: f64, b: f64, c: f64) -> TriMesh {
        let pts = generate_fallback_points(n).unwrap();
        let mut mesh = triangulate(&pts.xyz).unwrap();
        let shape = Ellipsoid { a, b, c };
        mesh.verts =
            (0..n).map(|i| shape.position(pts.lambda[i], pts.theta[i])).collect();
        mesh
    }

    fn discrete_energy(mesh: &TriMesh, mat: &ElasticMaterial) -> f64 {
        let mut e = 0.0;
        for tri in &mesh.tris {
            let d1 = mesh.verts[tri[0]] - mesh.verts[tri[2]];
            let d2 = mesh.verts[tri[1]] - mesh.verts[tri[2]];
            let e1 = mesh.ref_verts[tri[0]] - mesh.ref_verts[tri[2]];
            let e2 = mesh.ref_verts[tri[1]] - mesh.ref_verts[tri[2]];
            let g = Sym2::new(d1.dot(d1), d1.dot(d2), d2.dot(d2));
            let g0 = Sym2::new(e1.dot(e1), e1.dot(e2), e2.dot(e2));
            let det_c = g.det() / g0.det();
            let i1 = g.trace_product(g0.inverse()) - 2.0;
            let p = mat.partials(i1, det_c - 1.0).unwrap();
            e += 0.5 * p.w * g0.det().sqrt();
        }
        e
    }

    #[test]
    fn tetrahedron_mesh_is_closed() {
        let mesh = sphere_mesh(4);
        assert_eq!(mesh.tris.len(), 4);
        let mut degree = [0usize; 4];
        for tri in &mesh.tris {
            for &v in tri {
                degree[v] += 1;
            }
        }
        assert_eq!(degree, [3, 3, 3, 3]);
        // V - E + F = 4 - 6 + 4 = 2.
        mesh.validate().unwrap();
    }

    #[test]
    fn sphere_mesh_has_closed_genus_zero_count() {
        let mesh = sphere_mesh(529);
        assert_eq!(mesh.tris.len(), 2 * 529 - 4);
        mesh.validate().unwrap();
        // Outward orientation: triangle normals point away from the
        // centroid (here the origin).
        for tri in &mesh.tris {
            let d1 = mesh.verts[tri[1]] - mesh.verts[tri[0]];
            let d2 = mesh.verts[tri[2]] - mesh.verts[tri[0]];
            let mid = (mesh.verts[tri[0]] + mesh.verts[tri[1]] + mesh.verts[tri[2]]) * (1.0 / 3.0);
            assert!(d1.cross(d2).dot(mid) > 0.0);
        }
    }

    #[test]
    fn inscribed_sphere_mesh_area_approaches_4pi() {
        let mesh = sphere_mesh(8281);
        let total: f64 =
            mesh.tris.iter().map(|t| triangle_area(&mesh.ref_verts, t)).sum();
        assert!(total < 4.0 * PI, "inscribed area must lie below 4π, got {total}");
        assert_relative_eq!(total, 4.0 * PI, max_relative = 1e-3);
    }

    #[test]
    fn non_star_shaped_input_is_rejected() {
        // Octahedron plus a second point on the +x ray: the last point
        // and (1,0,0) project to the same direction from the centroid
        // (both rays are exactly axis-aligned), so the projection is not
        // injective.
        let points = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        assert!(matches!(triangulate(&points), Err(Error::Triangulation(_))));
    }

    #[test]
    fn tetrahedron_weights_equal_face_area() {
        let mesh = sphere_mesh(4);
        let w = ldsm_area_weights(&mesh);
        // Regular tetrahedron in the unit sphere: face area 2√3/3. Each
        // vertex touches 3 of the 4 congruent faces, so each weight is
        // one face area.
        let face = 2.0 * 3.0_f64.sqrt() / 3.0;
        for wi in &w {
            assert_relative_eq!(*wi, face, max_relative = 1e-13);
        }
        let total: f64 = mesh.tris.iter().map(|t| triangle_area(&mesh.ref_verts, t)).sum();
        assert_relative_eq!(w.iter().sum::<f64>(), total, max_relative = 1e-14);
    }

    #[test]
    fn weights_sum_to_mesh_area_and_stay_positive() {
        let mesh = deformed_mesh(529, 1.2, 1.0, 0.9);
        let w = ldsm_area_weights(&mesh);
        assert!(w.iter().all(|wi| *wi > 0.0));
        let total: f64 = mesh.tris.iter().map(|t| triangle_area(&mesh.ref_verts, t)).sum();
        assert_relative_eq!(w.iter().sum::<f64>(), total, max_relative = 1e-13);
    }

    #[test]
    fn forces_vanish_at_reference_state() {
        let mesh = sphere_mesh(256);
        let mat = ElasticMaterial::neo_hookean(2.5, 50.0);
        let f = ldsm_forces(&mesh, &mat).unwrap();
        let max = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max < 1e-12, "max |F| = {max} at the reference state");
    }

    #[test]
    fn forces_sum_to_zero_for_any_configuration() {
        let b = 1.0 / 1.3_f64.sqrt();
        let mesh = deformed_mesh(529, 1.3, b, b);
        let mat = ElasticMaterial { shear: 2.5, dilation: 50.0, tension: 0.7, bending: 0.0 };
        let f = ldsm_forces(&mesh, &mat).unwrap();
        let total = f.iter().fold(Vec3::zero(), |a, v| a + *v);
        let scale: f64 = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(scale > 0.1, "deformed state should carry real forces");
        assert!(total.norm() < 1e-12, "net force {} on {} vertices", total.norm(), f.len());
    }

    #[test]
    fn rigid_translation_leaves_forces_unchanged() {
        let mesh = deformed_mesh(64, 1.2, 0.9, 1.0);
        let mat = ElasticMaterial::neo_hookean(1.0, 10.0);
        let f0 = ldsm_forces(&mesh, &mat).unwrap();
        let mut moved = mesh.clone();
        let shift = Vec3::new(0.3, -1.7, 2.9);
        for v in &mut moved.verts {
            *v += shift;
        }
        let f1 = ldsm_forces(&moved, &mat).unwrap();
        // Forces depend on vertex differences only; the residual is the
        // rounding of the translated coordinates themselves.
        for (a, b) in f0.iter().zip(&f1) {
            assert_relative_eq!(a.x, b.x, epsilon = 1e-12, max_relative = 1e-11);
            assert_relative_eq!(a.y, b.y, epsilon = 1e-12, max_relative = 1e-11);
            assert_relative_eq!(a.z, b.z, epsilon = 1e-12, max_relative = 1e-11);
        }
    }

    #[test]
    fn forces_match_energy_finite_differences() {
        let b = 1.0 / 1.2_f64.sqrt();
        let mesh = deformed_mesh(64, 1.2, b, b);
        let mat = ElasticMaterial { shear: 1.0, dilation: 5.0, tension: 0.4, bending: 0.0 };
        let f = ldsm_forces(&mesh, &mat).unwrap();
        let h = 1e-6;
        for i in 0..mesh.verts.len() {
            for axis in 0..3 {
                let mut plus = mesh.clone();
                let mut minus = mesh.clone();
                match axis {
                    0 => {
                        plus.verts[i].x += h;
                        minus.verts[i].x -= h;
                    }
                    1 => {
                        plus.verts[i].y += h;
                        minus.verts[i].y -= h;
                    }
                    _ => {
                        plus.verts[i].z += h;
                        minus.verts[i].z -= h;
                    }
                }
                let fd = -(discrete_energy(&plus, &mat) - discrete_energy(&minus, &mat))
                    / (2.0 * h);
                let fi = match axis {
                    0 => f[i].x,
                    1 => f[i].y,
                    _ => f[i].z,
                };
                assert_relative_eq!(fi, fd, max_relative = 1e-5, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_triangle_is_reported_by_index() {
        let mut mesh = sphere_mesh(64);
        // Collapsing one edge flattens the two triangles sharing it; the
        // error names whichever comes first in iteration order.
        let [a, _, c] = mesh.tris[7];
        mesh.verts[a] = mesh.verts[c];
        let first = mesh
            .tris
            .iter()
            .position(|t| t.contains(&a) && t.contains(&c))
            .unwrap();
        let mat = ElasticMaterial::neo_hookean(1.0, 1.0);
        match ldsm_forces(&mesh, &mat) {
            Err(Error::DegenerateTriangle { index, .. }) => assert_eq!(index, first),
            other => panic!("expected a degenerate-triangle error, got {other:?}"),
        }
        assert!(ldsm_forces(&sphere_mesh(16), &ElasticMaterial {
            shear: 1.0,
            dilation: 1.0,
            tension: 0.0,
            bending: 0.5
        })
        .is_err());
    }
}
