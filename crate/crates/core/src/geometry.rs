//! Planar domains, unit vectors on the circle and the (2,1) matrix norm.
//!
//! Unit vectors double as complex numbers of modulus one; [`UnitVec::rotate`]
//! is complex multiplication.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on `x² + y² = 1` accepted by [`UnitVec::new`].
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x, self * rhs.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A point of S¹ ⊂ R² ≅ C.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUnitVec")]
pub struct UnitVec {
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
struct RawUnitVec {
    x: f64,
    y: f64,
}

impl TryFrom<RawUnitVec> for UnitVec {
    type Error = crate::error::Error;

    fn try_from(r: RawUnitVec) -> Result<Self> {
        UnitVec::new(r.x, r.y)
    }
}

impl UnitVec {
    pub const ONE: UnitVec = UnitVec { x: 1.0, y: 0.0 };
    pub const I: UnitVec = UnitVec { x: 0.0, y: 1.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || (x * x + y * y - 1.0).abs() > UNIT_TOL {
            return invalid(format!("({x}, {y}) is not a unit vector"));
        }
        Ok(UnitVec { x, y })
    }

    pub fn from_angle(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        UnitVec { x: c, y: s }
    }

    /// Normalizes `(x, y)`; `None` for the zero vector or non-finite input.
    pub fn normalize(x: f64, y: f64) -> Option<Self> {
        let r = x.hypot(y);
        if r > 0.0 && r.is_finite() {
            Some(UnitVec { x: x / r, y: y / r })
        } else {
            None
        }
    }

    pub fn x(self) -> f64 {
        self.x
    }

    pub fn y(self) -> f64 {
        self.y
    }

    pub fn as_point(self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn dot(self, other: UnitVec) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of `self × other`.
    pub fn cross(self, other: UnitVec) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Euclidean chord length `|self - other|`.
    pub fn chord(self, other: UnitVec) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn chord_sq(self, other: UnitVec) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Angle in `[0, 2π)` with `self = exp(ι·phase)`.
    pub fn phase(self) -> f64 {
        let t = self.y.atan2(self.x);
        if t >= 0.0 {
            t
        } else {
            let s = t + TAU;
            // t = -tiny rounds to 2π
            if s >= TAU {
                0.0
            } else {
                s
            }
        }
    }

    /// Complex product `self ⊙ other`.
    pub fn rotate(self, other: UnitVec) -> UnitVec {
        UnitVec { x: self.x * other.x - self.y * other.y, y: self.x * other.y + self.y * other.x }
    }

    pub fn conj(self) -> UnitVec {
        UnitVec { x: self.x, y: -self.y }
    }

    /// Integer complex power; negative powers conjugate.
    pub fn powi(self, d: i32) -> UnitVec {
        let mut base = if d < 0 { self.conj() } else { self };
        let mut e = d.unsigned_abs();
        let mut acc = UnitVec::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.rotate(base);
            }
            base = base.rotate(base);
            e >>= 1;
        }
        acc
    }
}

/// Geodesic distance on S¹, an angle in `[0, π]`.
pub fn geodesic_dist(u: UnitVec, v: UnitVec) -> f64 {
    u.cross(v).abs().atan2(u.dot(v))
}

/// Geodesic distance between raw pairs, validating that both are unit vectors.
pub fn geodesic_dist_checked(u: (f64, f64), v: (f64, f64)) -> Result<f64> {
    Ok(geodesic_dist(UnitVec::new(u.0, u.1)?, UnitVec::new(v.0, v.1)?))
}

pub fn rotate(u: UnitVec, v: UnitVec) -> UnitVec {
    u.rotate(v)
}

/// Real 2×2 matrix, row-major entries `a_rc`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a11: 1.0, a12: 0.0, a21: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    /// Sum of the Euclidean norms of the two columns.
    pub fn norm21(&self) -> f64 {
        self.a11.hypot(self.a21) + self.a12.hypot(self.a22)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22).sqrt()
    }
}

pub fn norm21(a: &Mat2) -> f64 {
    a.norm21()
}

/// Anything with a membership test.
pub trait Region {
    fn contains(&self, p: Point) -> bool;
}

impl<R: Region + ?Sized> Region for &R {
    fn contains(&self, p: Point) -> bool {
        (**self).contains(p)
    }
}

/// A bounded open planar region with a closed-form signed boundary distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Domain {
    Rectangle { xmin: f64, xmax: f64, ymin: f64, ymax: f64 },
    Disk { center: Point, radius: f64 },
}

impl Domain {
    pub fn rectangle(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let d = Domain::Rectangle { xmin, xmax, ymin, ymax };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        let d = Domain::Disk { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 }
    }

    pub fn unit_disk() -> Self {
        Domain::Disk { center: Point::ORIGIN, radius: 1.0 }
    }

    /// Checks the shape invariants; deserialized values should go through this.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Rectangle { xmin, xmax, ymin, ymax } => {
                if !(xmin < xmax && ymin < ymax) || ![xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite()) {
                    return invalid(format!("bad rectangle [{xmin},{xmax}]x[{ymin},{ymax}]"));
                }
            }
            Domain::Disk { center, radius } => {
                if !(radius > 0.0 && radius.is_finite() && center.x.is_finite() && center.y.is_finite()) {
                    return invalid(format!("bad disk center {center} radius {radius}"));
                }
            }
        }
        Ok(())
    }

    /// Signed Euclidean distance to the boundary: positive inside, negative outside.
    pub fn boundary_dist(&self, p: Point) -> f64 {
        match *self {
            Domain::Disk { center, radius } => radius - p.dist(center),
            Domain::Rectangle { xmin, xmax, ymin, ymax } => {
                let dx = (xmin - p.x).max(p.x - xmax);
                let dy = (ymin - p.y).max(p.y - ymax);
                if dx <= 0.0 && dy <= 0.0 {
                    -dx.max(dy)
                } else {
                    -dx.max(0.0).hypot(dy.max(0.0))
                }
            }
        }
    }

    /// Axis-aligned bounding box `(xmin, xmax, ymin, ymax)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Domain::Rectangle { xmin, xmax, ymin, ymax } => (xmin, xmax, ymin, ymax),
            Domain::Disk { center, radius } => {
                (center.x - radius, center.x + radius, center.y - radius, center.y + radius)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Rectangle { xmin, xmax, ymin, ymax } => (xmax - xmin).hypot(ymax - ymin),
            Domain::Disk { radius, .. } => 2.0 * radius,
        }
    }

    /// Distance from an interior point `p` to `∂Ω` along the ray `p + t·dir`
    /// (`dir` a unit axis or any unit vector).
    pub fn ray_exit(&self, p: Point, dir: Point) -> f64 {
        match *self {
            Domain::Disk { center, radius } => {
                let q = p - center;
                let b = q.dot(dir);
                let c = q.dot(q) - radius * radius;
                -b + (b * b - c).max(0.0).sqrt()
            }
            Domain::Rectangle { xmin, xmax, ymin, ymax } => {
                let mut t = f64::INFINITY;
                if dir.x > 0.0 {
                    t = t.min((xmax - p.x) / dir.x);
                } else if dir.x < 0.0 {
                    t = t.min((xmin - p.x) / dir.x);
                }
                if dir.y > 0.0 {
                    t = t.min((ymax - p.y) / dir.y);
                } else if dir.y < 0.0 {
                    t = t.min((ymin - p.y) / dir.y);
                }
                t.max(0.0)
            }
        }
    }
}

impl Region for Domain {
    fn contains(&self, p: Point) -> bool {
        self.boundary_dist(p) > 0.0
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Domain::Rectangle { xmin, xmax, ymin, ymax } => {
                write!(f, "rect {xmin:?} {xmax:?} {ymin:?} {ymax:?}")
            }
            Domain::Disk { center, radius } => {
                write!(f, "disk {:?} {:?} {radius:?}", center.x, center.y)
            }
        }
    }
}

/// Open annulus `r_in < |x - center| < r_out`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annulus {
    pub center: Point,
    pub r_in: f64,
    pub r_out: f64,
}

impl Region for Annulus {
    fn contains(&self, p: Point) -> bool {
        let r = p.dist(self.center);
        self.r_in < r && r < self.r_out
    }
}

/// Every point of the plane.
#[derive(Clone, Copy, Debug, Default)]
pub struct Everywhere;

impl Region for Everywhere {
    fn contains(&self, _p: Point) -> bool {
        true
    }
}

/// Wraps `angle` into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut t = angle % TAU;
    if t > PI {
        t -= TAU;
    } else if t <= -PI {
        t += TAU;
    }
    t
}
