//! Differential geometry of parameterized surfaces: metric tensors and
//! deformation invariants, unit normals, curvature, and the surface
//! Laplacian by spectral projection.

use crate::error::{Error, Result};
use crate::harmonics::{HarmonicBasis, ScalarExpansion, SurfaceJet};
use crate::vec3::{Sym2, Vec3};

/// Current and reference metric tensors with deformation invariants.
#[derive(Debug, Clone, Copy)]
pub struct MetricPair {
    /// Current metric, first fundamental form of the deformed map.
    pub g: Sym2,
    /// Reference metric, first fundamental form of the rest map.
    pub g0: Sym2,
    /// Deformation tensor C = G·G0⁻¹; not symmetric in general.
    pub c: [[f64; 2]; 2],
    /// tr C − 2; zero at the identity deformation.
    pub i1: f64,
    /// det C − 1 = det G / det G0 − 1; zero when area elements are kept.
    pub i2: f64,
}

/// First fundamental form of a jet as a symmetric 2×2 tensor.
pub fn first_form(jet: &SurfaceJet) -> Sym2 {
    Sym2 {
        a11: jet.xl.dot(jet.xl),
        a12: jet.xl.dot(jet.xt),
        a22: jet.xt.dot(jet.xt),
    }
}

/// Metric tensor together with its λ- and θ-derivatives, assembled from
/// a second-order jet.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub g: Sym2,
    /// ∂G/∂λ.
    pub gl: Sym2,
    /// ∂G/∂θ.
    pub gt: Sym2,
}

/// Differentiates the first fundamental form through the jet.
pub fn metric_jet(j: &SurfaceJet) -> MetricJet {
    MetricJet {
        g: first_form(j),
        gl: Sym2 {
            a11: 2.0 * j.xll.dot(j.xl),
            a12: j.xll.dot(j.xt) + j.xl.dot(j.xlt),
            a22: 2.0 * j.xlt.dot(j.xt),
        },
        gt: Sym2 {
            a11: 2.0 * j.xlt.dot(j.xl),
            a12: j.xlt.dot(j.xt) + j.xl.dot(j.xtt),
            a22: 2.0 * j.xtt.dot(j.xt),
        },
    }
}

/// Directional derivative of det A along dA for symmetric 2×2 A.
pub fn det_derivative(a: Sym2, da: Sym2) -> f64 {
    da.a11 * a.a22 + a.a11 * da.a22 - 2.0 * a.a12 * da.a12
}

/// Builds the metric pair at one node. `node` only labels errors.
pub fn metric_pair(jet_x: &SurfaceJet, jet_z: &SurfaceJet, node: usize) -> Result<MetricPair> {
    let g = first_form(jet_x);
    let g0 = first_form(jet_z);
    let det0 = g0.det();
    if det0 <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det: det0 });
    }
    let c = g.mul_full(g0.inverse());
    let i1 = c[0][0] + c[1][1] - 2.0;
    // det C = det G / det G0 algebraically; the quotient form is better
    // conditioned near the identity.
    let i2 = g.det() / det0 - 1.0;
    Ok(MetricPair { g, g0, c, i1, i2 })
}

/// Outward unit normal X_λ × X_θ / |X_λ × X_θ|.
pub fn unit_normal(jet: &SurfaceJet, node: usize) -> Result<Vec3> {
    let cross = jet.xl.cross(jet.xt);
    let norm = cross.norm();
    if norm <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det: norm * norm });
    }
    Ok(cross * (1.0 / norm))
}

/// Normal, fundamental forms, and curvatures at one node.
///
/// With outward normals from `unit_normal`, convex closed surfaces have
/// negative mean curvature: the unit sphere gives H = −1, R = 2.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureData {
    pub n_hat: Vec3,
    /// First fundamental form (E, F, G).
    pub first: Sym2,
    /// Second fundamental form (e, f, g).
    pub second: Sym2,
    /// Mean curvature, half the total curvature.
    pub h: f64,
    /// Scalar curvature, twice the Gaussian curvature.
    pub r: f64,
}

/// Computes curvature data from a second-order jet.
pub fn curvature(jet: &SurfaceJet, node: usize) -> Result<CurvatureData> {
    let first = first_form(jet);
    let det = first.det();
    if det <= 1e-14 {
        return Err(Error::DegenerateSurface { index: node, det });
    }
    let n_hat = unit_normal(jet, node)?;
    let second = Sym2 {
        a11: jet.xll.dot(n_hat),
        a12: jet.xlt.dot(n_hat),
        a22: jet.xtt.dot(n_hat),
    };
    let h = (second.a11 * first.a22 - 2.0 * second.a12 * first.a12 + second.a22 * first.a11)
        / (2.0 * det);
    let r = 2.0 * second.det() / det;
    Ok(CurvatureData { n_hat, first, second, h, r })
}

/// Result of a spectral surface-Laplacian application.
#[derive(Debug, Clone)]
pub struct SurfaceLaplacian {
    pub values: Vec<f64>,
    /// Relative residual of the field projection.
    pub max_residual: f64,
    /// True when the projection residual exceeds 1e−4; the field is then
    /// not resolved by the basis degree and values are suspect.
    pub under_resolved: bool,
}

/// Applies the metric surface Laplacian
/// (1/√det G) ∂_i (√det G · G⁻¹_ij ∂_j ·) to a nodal scalar field.
///
/// The field is expanded once in the harmonic basis; the divergence is
/// then opened by the product rule, with the metric factors and their
/// parameter derivatives evaluated exactly from the surface jets:
///
///   ∇²ₛu = G⁻¹_ij ∂²u/∂qᵢ∂qⱼ + bⱼ ∂u/∂qⱼ,
///   bⱼ = (1/√det G) ∂qᵢ(√det G · G⁻¹_ij).
///
/// Fitting the flux components √det G · G⁻¹ ∇u instead would alias: on a
/// sphere the λ-flux of any k ≠ 0 harmonic carries a 1/cos θ factor that
/// no finite harmonic expansion represents.
pub fn surface_laplacian(
    field: &[f64],
    jets: &[SurfaceJet],
    basis: &HarmonicBasis,
) -> Result<SurfaceLaplacian> {
    let m = basis.m();
    if field.len() != m || jets.len() != m {
        return Err(Error::InvalidInput(format!(
            "surface Laplacian needs {m} samples and jets, got {} and {}",
            field.len(),
            jets.len()
        )));
    }
    surface_laplacian_at(field, basis, jets, &basis.points.lambda, &basis.points.theta)
}

/// Same operator evaluated at arbitrary target nodes: the field is
/// sampled and expanded at the basis nodes, while the jets and (λ, θ)
/// arrays describe the surface at the targets.
pub fn surface_laplacian_at(
    field: &[f64],
    basis: &HarmonicBasis,
    jets: &[SurfaceJet],
    lambda: &[f64],
    theta: &[f64],
) -> Result<SurfaceLaplacian> {
    if field.len() != basis.m() {
        return Err(Error::InvalidInput(format!(
            "field has {} samples, basis has {} nodes",
            field.len(),
            basis.m()
        )));
    }
    let n = jets.len();
    if lambda.len() != n || theta.len() != n {
        return Err(Error::InvalidInput(format!(
            "target arrays disagree: {} jets, {} lambda, {} theta",
            n,
            lambda.len(),
            theta.len()
        )));
    }
    let (cf, max_residual) = basis.fit_with_residual(field);
    let expansion = ScalarExpansion { degree: basis.degree, coeffs: cf };
    let mut values = vec![0.0; n];
    for i in 0..n {
        let (lam, th) = (lambda[i], theta[i]);
        let u = expansion.jet2(lam, th)?;
        let mj = metric_jet(&jets[i]);
        let det = mj.g.det();
        if det <= 1e-14 {
            return Err(Error::DegenerateSurface { index: i, det });
        }
        let sd = det.sqrt();
        let gi = mj.g.inverse();
        // ∂(√det G)/∂q from the determinant chain rule.
        let sdl = det_derivative(mj.g, mj.gl) / (2.0 * sd);
        let sdt = det_derivative(mj.g, mj.gt) / (2.0 * sd);
        // ∂(G⁻¹)/∂q = −G⁻¹ (∂G/∂q) G⁻¹.
        let gil = gi.sandwich(mj.gl).scale(-1.0);
        let git = gi.sandwich(mj.gt).scale(-1.0);
        // T = √det G · G⁻¹; bⱼ = (∂λ T₁ⱼ + ∂θ T₂ⱼ)/√det G.
        let tl = gi.scale(sdl).add(gil.scale(sd));
        let tt = gi.scale(sdt).add(git.scale(sd));
        let b1 = (tl.a11 + tt.a12) / sd;
        let b2 = (tl.a12 + tt.a22) / sd;
        values[i] = gi.a11 * u.dll
            + 2.0 * gi.a12 * u.dlt
            + gi.a22 * u.dtt
            + b1 * u.dl
            + b2 * u.dt;
    }
    Ok(SurfaceLaplacian { values, max_residual, under_resolved: max_residual > 1e-4 })
}
