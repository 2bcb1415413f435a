//! Closed-form reference surfaces and dense tensor-product quadrature.
//!
//! Every shape is a smooth map X(λ, θ) from the rectangle
//! (−π, π] × [−π/2, π/2] onto a closed surface, together with its exact
//! first and second partial derivatives. These jets feed the reference
//! metric in force computations and serve as ground truth in tests.
//!
//! The dense quadrature here (uniform in λ, Gauss–Legendre in θ) is an
//! independent check on the mesh-free weights in `quadrature`: it never
//! touches spherical harmonics or node weights.

use crate::harmonics::SurfaceJet;
use crate::vec3::Vec3;

/// Smooth closed surface parameterized over (λ, θ).
pub trait ReferenceShape {
    /// Position and first/second partial derivatives at (λ, θ).
    fn jet(&self, lambda: f64, theta: f64) -> SurfaceJet;

    fn position(&self, lambda: f64, theta: f64) -> Vec3 {
        self.jet(lambda, theta).x
    }
}

/// Jet of the unit-sphere map (cos λ cos θ, sin λ cos θ, sin θ).
pub fn unit_sphere_jet(lambda: f64, theta: f64) -> SurfaceJet {
    let (sl, cl) = lambda.sin_cos();
    let (st, ct) = theta.sin_cos();
    SurfaceJet {
        x: Vec3::new(cl * ct, sl * ct, st),
        xl: Vec3::new(-sl * ct, cl * ct, 0.0),
        xt: Vec3::new(-cl * st, -sl * st, ct),
        xll: Vec3::new(-cl * ct, -sl * ct, 0.0),
        xlt: Vec3::new(sl * st, -cl * st, 0.0),
        xtt: Vec3::new(-cl * ct, -sl * ct, -st),
    }
}

fn scale_axes(v: Vec3, a: f64, b: f64, c: f64) -> Vec3 {
    Vec3::new(a * v.x, b * v.y, c * v.z)
}

/// Sphere of radius `r` centered at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub radius: f64,
}

impl ReferenceShape for Sphere {
    fn jet(&self, lambda: f64, theta: f64) -> SurfaceJet {
        let j = unit_sphere_jet(lambda, theta);
        let r = self.radius;
        SurfaceJet {
            x: j.x * r,
            xl: j.xl * r,
            xt: j.xt * r,
            xll: j.xll * r,
            xlt: j.xlt * r,
            xtt: j.xtt * r,
        }
    }
}

/// Axis-aligned ellipsoid (a cos λ cos θ, b sin λ cos θ, c sin θ).
#[derive(Debug, Clone, Copy)]
pub struct Ellipsoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ReferenceShape for Ellipsoid {
    fn jet(&self, lambda: f64, theta: f64) -> SurfaceJet {
        let j = unit_sphere_jet(lambda, theta);
        let (a, b, c) = (self.a, self.b, self.c);
        SurfaceJet {
            x: scale_axes(j.x, a, b, c),
            xl: scale_axes(j.xl, a, b, c),
            xt: scale_axes(j.xt, a, b, c),
            xll: scale_axes(j.xll, a, b, c),
            xlt: scale_axes(j.xlt, a, b, c),
            xtt: scale_axes(j.xtt, a, b, c),
        }
    }
}

/// Ellipsoid with a θ-dependent exp(−sin θ) bump, scaled by `scale`:
///
/// ```text
/// X = scale · ( a (1 + (bump/5) e^{−sin θ}) cos λ cos θ,
///               b (1 + bump e^{−sin θ})     sin λ cos θ,
///               c (1 + bump e^{−sin θ})     sin θ )
/// ```
#[derive(Debug, Clone, Copy)]
pub struct BumpedEllipsoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub bump: f64,
    pub scale: f64,
}

impl BumpedEllipsoid {
    /// Builds the shape with `scale` chosen so the enclosed volume equals
    /// the unit sphere's 4π/3.
    pub fn volume_normalized(a: f64, b: f64, c: f64, bump: f64) -> Self {
        let unscaled = Self { a, b, c, bump, scale: 1.0 };
        // Volume scales with the cube of a uniform scaling of the map.
        let v1 = enclosed_volume_dense(&unscaled, 256, 256);
        let target = 4.0 * std::f64::consts::PI / 3.0;
        Self { a, b, c, bump, scale: (target / v1).cbrt() }
    }
}

impl ReferenceShape for BumpedEllipsoid {
    fn jet(&self, lambda: f64, theta: f64) -> SurfaceJet {
        let (sl, cl) = lambda.sin_cos();
        let (st, ct) = theta.sin_cos();
        let s = self.scale;
        let (a, b, c) = (s * self.a, s * self.b, s * self.c);

        // g = e^{−sin θ}; the x bump amplitude is a fifth of the y/z one.
        let g = (-st).exp();
        let gp = -ct * g;
        let gpp = (st + ct * ct) * g;
        let (f1, f1p, f1pp) = (
            1.0 + self.bump / 5.0 * g,
            self.bump / 5.0 * gp,
            self.bump / 5.0 * gpp,
        );
        let (f2, f2p, f2pp) = (1.0 + self.bump * g, self.bump * gp, self.bump * gpp);

        SurfaceJet {
            x: Vec3::new(a * f1 * cl * ct, b * f2 * sl * ct, c * f2 * st),
            xl: Vec3::new(-a * f1 * sl * ct, b * f2 * cl * ct, 0.0),
            xt: Vec3::new(
                a * cl * (f1p * ct - f1 * st),
                b * sl * (f2p * ct - f2 * st),
                c * (f2p * st + f2 * ct),
            ),
            xll: Vec3::new(-a * f1 * cl * ct, -b * f2 * sl * ct, 0.0),
            xlt: Vec3::new(
                -a * sl * (f1p * ct - f1 * st),
                b * cl * (f2p * ct - f2 * st),
                0.0,
            ),
            xtt: Vec3::new(
                a * cl * (f1pp * ct - 2.0 * f1p * st - f1 * ct),
                b * sl * (f2pp * ct - 2.0 * f2p * st - f2 * ct),
                c * (f2pp * st + 2.0 * f2p * ct - f2 * st),
            ),
        }
    }
}

/// Biconcave red-cell rest shape: the sphere's x coordinate is remapped
/// through an even-degree polynomial of the distance from the x axis,
///
/// ```text
/// X = R · ( ½ x_s (0.21 + 2 ρ² − 1.12 ρ⁴), y_s, z_s ),   ρ² = y_s² + z_s²,
/// ```
///
/// with (x_s, y_s, z_s) the unit-sphere map. On the sphere ρ² = 1 − x_s²,
/// so the x component is R·h(x_s) for a quintic h.
#[derive(Debug, Clone, Copy)]
pub struct RedCell {
    pub radius: f64,
}

impl RedCell {
    /// h(x) = ½ x p(1 − x²) with p(s) = 0.21 + 2s − 1.12 s², plus h', h''.
    fn profile(x: f64) -> (f64, f64, f64) {
        let s = 1.0 - x * x;
        let p = 0.21 + 2.0 * s - 1.12 * s * s;
        let pp = 2.0 - 2.24 * s;
        let ppp = -2.24;
        let h = 0.5 * x * p;
        let hp = 0.5 * (p - 2.0 * x * x * pp);
        let hpp = 0.5 * (-6.0 * x * pp + 4.0 * x * x * x * ppp);
        (h, hp, hpp)
    }
}

impl ReferenceShape for RedCell {
    fn jet(&self, lambda: f64, theta: f64) -> SurfaceJet {
        let j = unit_sphere_jet(lambda, theta);
        let r = self.radius;
        let (h, hp, hpp) = Self::profile(j.x.x);
        // Chain rule through the sphere's x coordinate; y, z scale directly.
        SurfaceJet {
            x: Vec3::new(r * h, r * j.x.y, r * j.x.z),
            xl: Vec3::new(r * hp * j.xl.x, r * j.xl.y, r * j.xl.z),
            xt: Vec3::new(r * hp * j.xt.x, r * j.xt.y, r * j.xt.z),
            xll: Vec3::new(
                r * (hpp * j.xl.x * j.xl.x + hp * j.xll.x),
                r * j.xll.y,
                r * j.xll.z,
            ),
            xlt: Vec3::new(
                r * (hpp * j.xl.x * j.xt.x + hp * j.xlt.x),
                r * j.xlt.y,
                r * j.xlt.z,
            ),
            xtt: Vec3::new(
                r * (hpp * j.xt.x * j.xt.x + hp * j.xtt.x),
                r * j.xtt.y,
                r * j.xtt.z,
            ),
        }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], found by Newton iteration
/// from the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Applies `f(λ, θ, jet)` over a dense tensor grid (uniform-in-λ ×
/// Gauss–Legendre-in-θ) and sums with the product weights. Both rules
/// converge fast for the smooth closed surfaces here.
fn tensor_integrate<S: ReferenceShape + ?Sized>(
    shape: &S,
    n_lambda: usize,
    n_theta: usize,
    f: impl Fn(&SurfaceJet) -> f64,
) -> f64 {
    use std::f64::consts::PI;
    let (tn, tw) = gauss_legendre(n_theta);
    let dl = 2.0 * PI / n_lambda as f64;
    let mut total = 0.0;
    for (tj, twj) in tn.iter().zip(&tw) {
        let theta = 0.5 * PI * tj;
        let w_theta = 0.5 * PI * twj;
        let mut row = 0.0;
        for i in 0..n_lambda {
            let lambda = -PI + (i as f64 + 0.5) * dl;
            row += f(&shape.jet(lambda, theta));
        }
        total += w_theta * row * dl;
    }
    total
}

/// Surface area ∫∫ |X_λ × X_θ| dλ dθ on a dense tensor grid.
pub fn surface_area_dense<S: ReferenceShape + ?Sized>(
    shape: &S,
    n_lambda: usize,
    n_theta: usize,
) -> f64 {
    tensor_integrate(shape, n_lambda, n_theta, |j| j.xl.cross(j.xt).norm())
}

/// Enclosed volume (1/3)∮ X·n̂ dA = (1/3)∫∫ X·(X_λ × X_θ) dλ dθ.
pub fn enclosed_volume_dense<S: ReferenceShape + ?Sized>(
    shape: &S,
    n_lambda: usize,
    n_theta: usize,
) -> f64 {
    tensor_integrate(shape, n_lambda, n_theta, |j| j.x.dot(j.xl.cross(j.xt)) / 3.0)
}
