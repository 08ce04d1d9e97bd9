//! Planar helpers shared by the grid checks and the uncertainty regions.

use nalgebra::{Point2, Vector2};

pub type Point = Point2<f64>;

#[inline]
pub fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

#[inline]
fn cross_vec(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Collinearity test scaled by the lengths of the two legs, so the threshold
/// is a sine rather than an area.
pub fn nearly_collinear(a: &Point, b: &Point, c: &Point, tol: f64) -> bool {
    let ab = b - a;
    let ac = c - a;
    let scale = ab.norm() * ac.norm();
    if scale == 0.0 {
        return true;
    }
    (cross_vec(&ab, &ac) / scale).abs() <= tol
}

/// Twice the signed area (positive for counter-clockwise in a y-up frame).
pub fn signed_area2(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let p = &poly[i];
            let q = &poly[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum()
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    signed_area2(poly).abs() / 2.0
}

/// True when the quad is strictly convex with no three vertices collinear.
/// Works for either orientation.
pub fn is_strictly_convex(poly: &[Point], tol: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        let c = &poly[(i + 2) % n];
        if nearly_collinear(a, b, c, tol) {
            return false;
        }
        let s = cross(a, b, c).signum();
        if sign == 0.0 {
            sign = s;
        } else if s != sign {
            return false;
        }
    }
    // a self-intersecting "bow tie" has consistent turns only if it winds twice
    let total: f64 = signed_area2(poly);
    total.signum() == sign
}

/// Andrew's monotone chain. Returns counter-clockwise vertices (y-up sense)
/// with collinear points removed. Duplicate input collapses to fewer vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

pub fn segment_segment_distance(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Inclusive containment for a counter-clockwise convex polygon.
pub fn convex_contains(poly: &[Point], p: &Point) -> bool {
    match poly.len() {
        0 => false,
        1 => poly[0] == *p,
        2 => point_segment_distance(p, &poly[0], &poly[1]) == 0.0,
        n => (0..n).all(|i| cross(&poly[i], &poly[(i + 1) % n], p) >= 0.0),
    }
}

/// Edges of a hull; a single point yields one zero-length edge so callers
/// can treat every hull uniformly.
pub fn edges(poly: &[Point]) -> Vec<(Point, Point)> {
    match poly.len() {
        0 => Vec::new(),
        1 => vec![(poly[0], poly[0])],
        2 => vec![(poly[0], poly[1])],
        n => (0..n).map(|i| (poly[i], poly[(i + 1) % n])).collect(),
    }
}

/// Minimum distance between two convex polygons (0 when they intersect).
pub fn convex_min_distance(a: &[Point], b: &[Point]) -> f64 {
    if a.iter().any(|p| convex_contains(b, p)) || b.iter().any(|p| convex_contains(a, p)) {
        return 0.0;
    }
    let ea = edges(a);
    let eb = edges(b);
    let mut best = f64::INFINITY;
    for (p, q) in &ea {
        for (r, s) in &eb {
            best = best.min(segment_segment_distance(p, q, r, s));
        }
    }
    best
}

/// Maximum distance between two convex polygons; attained at a vertex pair.
pub fn convex_max_distance(a: &[Point], b: &[Point]) -> f64 {
    let mut best: f64 = 0.0;
    for p in a {
        for q in b {
            best = best.max((p - q).norm());
        }
    }
    best
}
