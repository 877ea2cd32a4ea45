use std::ops::{Add, Mul, Sub};

/// A point (or vector) of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Rotation by -pi/2: for a counterclockwise boundary traversal this is the outward normal direction.
    pub fn perp_right(self) -> Point {
        Point::new(self.y, -self.x)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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

/// Twice the signed area of (p0, p1, p2); positive for counterclockwise order.
pub fn signed_area2(p0: Point, p1: Point, p2: Point) -> f64 {
    (p1 - p0).cross(p2 - p0)
}

/// Circumcenter of three points.
///
/// Solves the perpendicular-bisector system in coordinates relative to `p0`
/// with partial pivoting. Points are rejected as collinear when
/// `|2 * signed area| < 1e-14 * s^2`, `s` being the largest coordinate
/// magnitude of the two relative vectors.
pub fn circumcenter(p0: Point, p1: Point, p2: Point) -> Option<Point> {
    let a = p1 - p0;
    let b = p2 - p0;
    let scale = a.x.abs().max(a.y.abs()).max(b.x.abs()).max(b.y.abs());
    let area2 = a.cross(b);
    if !(area2.abs() >= 1e-14 * scale * scale) || scale == 0.0 {
        return None;
    }
    // Rows: 2 a . c = |a|^2, 2 b . c = |b|^2 with c = center - p0.
    let mut m = [[a.x, a.y, 0.5 * a.dot(a)], [b.x, b.y, 0.5 * b.dot(b)]];
    if m[1][0].abs() > m[0][0].abs() {
        m.swap(0, 1);
    }
    let factor = m[1][0] / m[0][0];
    let m11 = m[1][1] - factor * m[0][1];
    let r1 = m[1][2] - factor * m[0][2];
    let cy = r1 / m11;
    let cx = (m[0][2] - m[0][1] * cy) / m[0][0];
    Some(p0 + Point::new(cx, cy))
}

/// Barycentric coordinates of `p` with respect to the triangle (p0, p1, p2).
pub fn barycentric(p: Point, p0: Point, p1: Point, p2: Point) -> [f64; 3] {
    let area2 = signed_area2(p0, p1, p2);
    let l0 = signed_area2(p, p1, p2) / area2;
    let l1 = signed_area2(p0, p, p2) / area2;
    [l0, l1, 1.0 - l0 - l1]
}
