//! Plane geometry for the simulator: rays, segments and discs.

use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(libm::cos(angle), libm::sin(angle))
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn length(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).length()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }
}

/// Distance along the unit-direction ray to segment `s`, if it is hit.
pub fn ray_segment(origin: Vec2, dir: Vec2, s: Segment) -> Option<f64> {
    let e = s.b - s.a;
    let denom = dir.cross(e);
    let w = s.a - origin;
    if denom == 0.0 {
        // Parallel. A collinear segment is hit at its nearest endpoint ahead.
        if w.cross(dir) != 0.0 {
            return None;
        }
        let ta = w.dot(dir);
        let tb = (s.b - origin).dot(dir);
        let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        return if hi < 0.0 { None } else { Some(lo.max(0.0)) };
    }
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Distance along the unit-direction ray to where it enters the circle.
///
/// Circles that contain the origin are not reported: the ray never enters them.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let m = origin - center;
    let c = m.dot(m) - radius * radius;
    if c < 0.0 {
        return None;
    }
    let b = m.dot(dir);
    if b > 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    Some((-b - libm::sqrt(disc)).max(0.0))
}

pub fn point_segment_distance(p: Vec2, s: Segment) -> f64 {
    let e = s.b - s.a;
    let len2 = e.dot(e);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - s.a).dot(e) / len2).clamp(0.0, 1.0)
    };
    p.distance(s.a + e * t)
}

/// Third side of a triangle with sides `a`, `b` enclosing angle `gamma`.
pub fn law_of_cosines(a: f64, b: f64, gamma: f64) -> f64 {
    libm::sqrt((a * a + b * b - 2.0 * a * b * libm::cos(gamma)).max(0.0))
}
