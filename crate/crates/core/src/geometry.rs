//! 2D geometry primitives shared by the spatial model and the cell grid.
//!
//! All coordinates are meters in a level-local frame. Membership tests are
//! boundary-inclusive so that a point exactly on an edge counts as inside.

use serde::{Deserialize, Serialize};

const EPS: f64 = 1e-9;

/// A point in the local metric frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Closed polygon given as its vertex ring (no repeated last vertex).
pub type Polygon = Vec<Point>;

/// Signed area via the shoelace formula; positive for counter-clockwise rings.
pub fn signed_area(poly: &Polygon) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

pub fn area(poly: &Polygon) -> f64 {
    signed_area(poly).abs()
}

/// Axis-aligned bounding box as (min, max) corners.
pub fn bounding_box(poly: &Polygon) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let len = a.distance(b);
    if len < EPS {
        return p.distance(a) < EPS;
    }
    if cross.abs() > EPS * len {
        return false;
    }
    let dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    dot >= -EPS && dot <= len * len + EPS
}

/// Boundary-inclusive point-in-polygon test (even-odd ray cast).
pub fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if on_segment(p, poly[i], poly[(i + 1) % n]) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| -> f64 {
        (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < -EPS && d3 * d4 < -EPS
}

/// True when no two non-adjacent edges cross (shared endpoints allowed).
pub fn is_simple_polygon(poly: &Polygon) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip adjacent edges (they share a vertex by construction).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_properly_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Projection parameter t of `p` onto segment a->b (0 at a, 1 at b, unclamped)
/// plus the perpendicular distance to the infinite support line.
pub fn project_on_segment(p: Point, a: Point, b: Point) -> (f64, f64) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 < EPS * EPS {
        return (0.0, p.distance(a));
    }
    let t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    let perp = ((p.x - a.x) * dy - (p.y - a.y) * dx).abs() / len2.sqrt();
    (t, perp)
}
