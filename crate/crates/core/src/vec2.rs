use core::ops::{Add, Mul, Neg, Sub};

use crate::Real;

/// A planar vector over any [`Real`] scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec2<R = f64> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Vec2<R> {
    pub fn new(x: R, y: R) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(R::zero(), R::zero())
    }

    pub fn cst(x: f64, y: f64) -> Self {
        Vec2::new(R::cst(x), R::cst(y))
    }

    /// Unit vector at `angle` radians from the x axis.
    pub fn from_angle(angle: R) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Self) -> R {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Self) -> R {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> R {
        self.dot(self)
    }

    pub fn norm(self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn scale(self, s: R) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Self {
        Vec2::new(-self.y, self.x)
    }

    /// Rotation by `angle` (counterclockwise).
    pub fn rotate(self, angle: R) -> Self {
        let (s, c) = (angle.sin(), angle.cos());
        Vec2::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    pub fn angle(self) -> R {
        self.y.atan2(self.x)
    }

    pub fn value(&self) -> Vec2<f64> {
        Vec2::new(self.x.value(), self.y.value())
    }
}

impl Vec2<f64> {
    pub fn lift<R: Real>(self) -> Vec2<R> {
        Vec2::new(R::cst(self.x), R::cst(self.y))
    }

    pub fn dist(self, o: Self) -> f64 {
        (self - o).norm()
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for Vec2<f64> {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl<R: Real> Add for Vec2<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<R: Real> Sub for Vec2<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<R: Real> Neg for Vec2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<R: Real> Mul<f64> for Vec2<R> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }
}
