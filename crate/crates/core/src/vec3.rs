use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Plain 3-vector. Kept deliberately minimal; everything hot-path is
/// written against this type so the compiler can keep it in registers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const ZERO3: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn zero() -> Self {
        ZERO3
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

/// Symmetric 2x2 matrix in surface-coordinate index order (lambda, theta).
/// Used for first fundamental forms and their inverses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(self) -> f64 {
        self.a11 + self.a22
    }

    pub fn inverse(self) -> Sym2 {
        let d = self.det();
        Sym2::new(self.a22 / d, -self.a12 / d, self.a11 / d)
    }

    pub fn scale(self, s: f64) -> Sym2 {
        Sym2::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }

    pub fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }

    /// tr(self * other) for symmetric factors.
    pub fn trace_product(self, o: Sym2) -> f64 {
        self.a11 * o.a11 + 2.0 * self.a12 * o.a12 + self.a22 * o.a22
    }

    /// General (non-symmetric) 2x2 product self * other, returned row-major.
    pub fn mul_full(self, o: Sym2) -> [[f64; 2]; 2] {
        [
            [
                self.a11 * o.a11 + self.a12 * o.a12,
                self.a11 * o.a12 + self.a12 * o.a22,
            ],
            [
                self.a12 * o.a11 + self.a22 * o.a12,
                self.a12 * o.a12 + self.a22 * o.a22,
            ],
        ]
    }

    /// Congruence-style triple product A * B * A for symmetric A, B
    /// (result is symmetric).
    pub fn sandwich(self, b: Sym2) -> Sym2 {
        // rows of m = self * b
        let m11 = self.a11 * b.a11 + self.a12 * b.a12;
        let m12 = self.a11 * b.a12 + self.a12 * b.a22;
        let m21 = self.a12 * b.a11 + self.a22 * b.a12;
        let m22 = self.a12 * b.a12 + self.a22 * b.a22;
        Sym2::new(
            m11 * self.a11 + m12 * self.a12,
            m11 * self.a12 + m12 * self.a22,
            m21 * self.a12 + m22 * self.a22,
        )
    }
}
