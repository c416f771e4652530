//! Plane primitives: points, vectors, oriented vertex angles, circles and arcs.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneVector {
    pub dx: f64,
    pub dy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

/// Interior vertex angle with the orientation of the turn taken at the apex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedAngle {
    pub size: f64,
    pub turn: i8,
}

/// Direction of travel around a circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rotation {
    Ccw,
    Cw,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("apex coincides with a neighbour")]
    DegenerateVertex,
    #[error("points are collinear")]
    CollinearPoints,
    #[error("empty input")]
    EmptyInput,
    #[error("no point at unit distance from both endpoints")]
    NoSolution,
    #[error("self lies on the line through its neighbours")]
    AmbiguousSide,
    #[error("point is not on the circle")]
    PointOffCircle,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl PlaneVector {
    pub const ZERO: PlaneVector = PlaneVector { dx: 0.0, dy: 0.0 };

    pub fn new(dx: f64, dy: f64) -> Self {
        PlaneVector { dx, dy }
    }

    pub fn norm(self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn dot(self, other: PlaneVector) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn cross(self, other: PlaneVector) -> f64 {
        self.dx * other.dy - self.dy * other.dx
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> PlaneVector {
        PlaneVector::new(-self.dy, self.dx)
    }

    pub fn unit(self) -> Option<PlaneVector> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Unsigned angle between two vectors, in `[0, π]`.
    pub fn angle_to(self, other: PlaneVector) -> f64 {
        self.cross(other).abs().atan2(self.dot(other))
    }
}

impl Sub for Point2 {
    type Output = PlaneVector;
    fn sub(self, rhs: Point2) -> PlaneVector {
        PlaneVector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Add<PlaneVector> for Point2 {
    type Output = Point2;
    fn add(self, rhs: PlaneVector) -> Point2 {
        Point2::new(self.x + rhs.dx, self.y + rhs.dy)
    }
}

impl Sub<PlaneVector> for Point2 {
    type Output = Point2;
    fn sub(self, rhs: PlaneVector) -> Point2 {
        Point2::new(self.x - rhs.dx, self.y - rhs.dy)
    }
}

impl Add for PlaneVector {
    type Output = PlaneVector;
    fn add(self, rhs: PlaneVector) -> PlaneVector {
        PlaneVector::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl Sub for PlaneVector {
    type Output = PlaneVector;
    fn sub(self, rhs: PlaneVector) -> PlaneVector {
        PlaneVector::new(self.dx - rhs.dx, self.dy - rhs.dy)
    }
}

impl Neg for PlaneVector {
    type Output = PlaneVector;
    fn neg(self) -> PlaneVector {
        PlaneVector::new(-self.dx, -self.dy)
    }
}

impl Mul<f64> for PlaneVector {
    type Output = PlaneVector;
    fn mul(self, k: f64) -> PlaneVector {
        PlaneVector::new(self.dx * k, self.dy * k)
    }
}

impl Circle {
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        self.center.distance(p) <= self.radius + eps
    }
}

/// The angle ∠(prev, apex, next) and the sign of the turn made at `apex`.
pub fn vertex_angle(
    prev: Point2,
    apex: Point2,
    next: Point2,
    tol: &Tolerances,
) -> Result<OrientedAngle, GeometryError> {
    let back = prev - apex;
    let fwd = next - apex;
    let (nb, nf) = (back.norm(), fwd.norm());
    if nb <= tol.len || nf <= tol.len {
        return Err(GeometryError::DegenerateVertex);
    }
    let size = back.angle_to(fwd);
    let cross = (apex - prev).cross(fwd);
    let turn = if cross.abs() <= tol.ang * nb * nf {
        0
    } else if cross > 0.0 {
        1
    } else {
        -1
    };
    Ok(OrientedAngle { size, turn })
}

pub fn circle_through(a: Point2, b: Point2, c: Point2, tol: &Tolerances) -> Result<Circle, GeometryError> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d.abs() * 0.25 < tol.area {
        return Err(GeometryError::CollinearPoints);
    }
    let (b2, c2) = (ab.dot(ab), ac.dot(ac));
    let ux = (ac.dy * b2 - ab.dy * c2) / d;
    let uy = (ab.dx * c2 - ac.dx * b2) / d;
    let center = a + PlaneVector::new(ux, uy);
    Ok(Circle {
        center,
        radius: PlaneVector::new(ux, uy).norm(),
    })
}

fn circle_from_two(a: Point2, b: Point2) -> Circle {
    Circle {
        center: a.midpoint(b),
        radius: 0.5 * a.distance(b),
    }
}

fn circle_from_three(a: Point2, b: Point2, c: Point2) -> Circle {
    match circle_through(a, b, c, &Tolerances::exact()) {
        Ok(circle) => circle,
        // Collinear: the two farthest points span the circle.
        Err(_) => [circle_from_two(a, b), circle_from_two(a, c), circle_from_two(b, c)]
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .expect("three candidates"),
    }
}

/// Minimal enclosing circle (incremental Welzl, deterministic input order).
pub fn smallest_enclosing_circle(points: &[Point2]) -> Result<Circle, GeometryError> {
    const SLACK: f64 = 1e-12;
    let first = *points.first().ok_or(GeometryError::EmptyInput)?;
    let mut c = Circle {
        center: first,
        radius: 0.0,
    };
    let inside = |c: &Circle, p: Point2| c.center.distance(p) <= c.radius * (1.0 + SLACK) + SLACK;
    for i in 1..points.len() {
        if inside(&c, points[i]) {
            continue;
        }
        c = Circle {
            center: points[i],
            radius: 0.0,
        };
        for j in 0..i {
            if inside(&c, points[j]) {
                continue;
            }
            c = circle_from_two(points[i], points[j]);
            for k in 0..j {
                if !inside(&c, points[k]) {
                    c = circle_from_three(points[i], points[j], points[k]);
                }
            }
        }
    }
    Ok(c)
}

/// Point on the perpendicular bisector of `prev`–`next` at unit distance from both,
/// on the far side of that line from `me`.
pub fn equidistant_bisector_point(
    prev: Point2,
    me: Point2,
    next: Point2,
    tol: &Tolerances,
) -> Result<Point2, GeometryError> {
    let chord = next - prev;
    let c = chord.norm();
    if c > 2.0 + tol.len {
        return Err(GeometryError::NoSolution);
    }
    let half = (0.5 * c).min(1.0);
    let depth = (1.0 - half * half).max(0.0).sqrt();
    if c <= tol.len {
        let dir = (prev - me).unit().ok_or(GeometryError::AmbiguousSide)?;
        return Ok(prev + dir * depth);
    }
    let normal = chord.perp() * (1.0 / c);
    let side = normal.dot(me - prev);
    if side.abs() <= tol.len {
        return Err(GeometryError::AmbiguousSide);
    }
    let m = prev.midpoint(next);
    Ok(m + normal * (-side.signum() * depth))
}

pub fn rotate_about(center: Point2, p: Point2, angle: f64) -> Point2 {
    let (s, c) = angle.sin_cos();
    let v = p - center;
    center + PlaneVector::new(c * v.dx - s * v.dy, s * v.dx + c * v.dy)
}

/// Central angle swept going from `from` to `to` in the given rotational sense.
pub fn central_arc_angle(
    circle: &Circle,
    from: Point2,
    to: Point2,
    via: Rotation,
    tol: &Tolerances,
) -> Result<f64, GeometryError> {
    let slack = tol.len * circle.radius.max(1.0) * 1e3;
    for p in [from, to] {
        if (circle.center.distance(p) - circle.radius).abs() > slack {
            return Err(GeometryError::PointOffCircle);
        }
    }
    let a = from - circle.center;
    let b = to - circle.center;
    let ccw = a.cross(b).atan2(a.dot(b)).rem_euclid(TAU);
    Ok(match via {
        Rotation::Ccw => ccw,
        Rotation::Cw => (TAU - ccw).rem_euclid(TAU),
    })
}

/// Polar angle of `p` around `center`, in `[0, 2π)`.
pub fn polar_angle(center: Point2, p: Point2) -> f64 {
    let v = p - center;
    v.dy.atan2(v.dx).rem_euclid(TAU)
}

/// Difference of two angles wrapped into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn t() -> Tolerances {
        Tolerances::default()
    }

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn straight_vertex_has_no_turn() {
        let a = vertex_angle(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), &t()).unwrap();
        assert_abs_diff_eq!(a.size, PI, epsilon = 1e-12);
        assert_eq!(a.turn, 0);
    }

    #[test]
    fn left_turn_is_positive() {
        let a = vertex_angle(p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), &t()).unwrap();
        assert_abs_diff_eq!(a.size, FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(a.turn, 1);
    }

    #[test]
    fn hairpin_matches_atan2_oracle() {
        let a = vertex_angle(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 0.001), &t()).unwrap();
        let oracle = {
            let back = (0.0f64 - 1.0, 0.0f64);
            let fwd = (0.0f64 - 1.0, 0.001f64);
            (fwd.1.atan2(fwd.0) - back.1.atan2(back.0)).abs()
        };
        assert_abs_diff_eq!(a.size, oracle, epsilon = 1e-12);
        assert!((a.size - 0.001).abs() < 1e-5);
        assert_eq!(a.turn, 1);
    }

    #[test]
    fn coincident_apex_is_degenerate() {
        assert_eq!(
            vertex_angle(p(0.0, 0.0), p(0.0, 0.0), p(1.0, 0.0), &t()),
            Err(GeometryError::DegenerateVertex)
        );
    }

    #[test]
    fn circle_through_examples() {
        let c = circle_through(p(1.0, 0.0), p(0.0, 1.0), p(-1.0, 0.0), &t()).unwrap();
        assert_abs_diff_eq!(c.center.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.center.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.radius, 1.0, epsilon = 1e-12);

        let c = circle_through(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 1.0), &t()).unwrap();
        assert_abs_diff_eq!(c.center.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.center.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.radius, 1.0, epsilon = 1e-12);

        assert_eq!(
            circle_through(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), &t()),
            Err(GeometryError::CollinearPoints)
        );
    }

    #[test]
    fn sec_small_cases() {
        let c = smallest_enclosing_circle(&[p(0.0, 0.0)]).unwrap();
        assert_eq!(c.radius, 0.0);
        let c = smallest_enclosing_circle(&[p(0.0, 0.0), p(2.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(c.center.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.radius, 1.0, epsilon = 1e-12);
        assert_eq!(smallest_enclosing_circle(&[]), Err(GeometryError::EmptyInput));
    }

    #[test]
    fn bisector_point_examples() {
        let q = equidistant_bisector_point(p(0.0, 0.0), p(1.0, 0.5), p(2.0, 0.0), &t()).unwrap();
        assert_abs_diff_eq!(q.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 0.0, epsilon = 1e-12);

        let h = 3f64.sqrt() / 2.0;
        let q = equidistant_bisector_point(p(0.5, h), p(1.0, 0.0), p(0.5, -h), &t()).unwrap();
        assert_abs_diff_eq!(q.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.distance(p(0.5, h)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.distance(p(0.5, -h)), 1.0, epsilon = 1e-12);

        assert_eq!(
            equidistant_bisector_point(p(0.0, 0.0), p(1.0, 1.0), p(3.0, 0.0), &t()),
            Err(GeometryError::NoSolution)
        );
        assert_eq!(
            equidistant_bisector_point(p(0.0, 0.0), p(1.0, 0.0), p(1.5, 0.0), &t()),
            Err(GeometryError::AmbiguousSide)
        );
    }

    #[test]
    fn rotation_examples() {
        let q = rotate_about(Point2::ORIGIN, p(1.0, 0.0), FRAC_PI_2);
        assert_abs_diff_eq!(q.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.y, 1.0, epsilon = 1e-12);
        assert_eq!(rotate_about(p(3.0, 4.0), p(1.0, 2.0), 0.0), p(1.0, 2.0));
        let q = rotate_about(p(3.0, 4.0), p(1.0, 2.0), TAU);
        assert!(q.distance(p(1.0, 2.0)) < 1e-9);
    }

    #[test]
    fn arc_angle_examples() {
        let unit = Circle {
            center: Point2::ORIGIN,
            radius: 1.0,
        };
        let a = central_arc_angle(&unit, p(1.0, 0.0), p(0.0, 1.0), Rotation::Ccw, &t()).unwrap();
        let b = central_arc_angle(&unit, p(1.0, 0.0), p(0.0, 1.0), Rotation::Cw, &t()).unwrap();
        assert_abs_diff_eq!(a, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 3.0 * FRAC_PI_2, epsilon = 1e-12);

        let big = Circle {
            center: Point2::ORIGIN,
            radius: 2.0,
        };
        let q = p(2.0 * (PI / 3.0).cos(), 2.0 * (PI / 3.0).sin());
        let short = central_arc_angle(&big, p(2.0, 0.0), q, Rotation::Ccw, &t()).unwrap();
        let long = central_arc_angle(&big, p(2.0, 0.0), q, Rotation::Cw, &t()).unwrap();
        assert_abs_diff_eq!(short * big.radius, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(long * big.radius, 2.0 * 5.0 * PI / 3.0, epsilon = 1e-12);

        assert_eq!(
            central_arc_angle(&unit, p(2.0, 0.0), p(0.0, 1.0), Rotation::Ccw, &t()),
            Err(GeometryError::PointOffCircle)
        );
    }
}
