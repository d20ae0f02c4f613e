//! Planar shapes and exact minimum distances between them.
//!
//! Coordinates are projected metres. Every shape is validated on
//! construction, so the distance functions never fail.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polyline needs at least 2 vertices, got {0}")]
    PolylineTooShort(usize),
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    PolygonTooShort(usize),
    #[error("polygon ring is self-intersecting")]
    SelfIntersecting,
    #[error("polygon holes are unsupported")]
    HolesUnsupported,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// An open chain of at least two vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::PolylineTooShort(vertices.len()));
        }
        if !vertices.iter().all(Point::is_finite) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

/// A simple polygon given by its outer ring, implicitly closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    ring: Vec<Point>,
}

impl Polygon {
    /// Accepts the ring either open or explicitly closed (last vertex equal to the first).
    pub fn new(mut ring: Vec<Point>) -> Result<Self, GeometryError> {
        if !ring.iter().all(Point::is_finite) {
            return Err(GeometryError::NonFinite);
        }
        ring.dedup();
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        let mut distinct: Vec<Point> = Vec::with_capacity(ring.len());
        for p in &ring {
            if !distinct.contains(p) {
                distinct.push(*p);
            }
        }
        if distinct.len() < 3 {
            return Err(GeometryError::PolygonTooShort(distinct.len()));
        }
        let polygon = Polygon { ring };
        if polygon.self_intersects() {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(polygon)
    }

    pub fn ring(&self) -> &[Point] {
        &self.ring
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.ring.len();
        (0..n).map(move |i| (self.ring[i], self.ring[(i + 1) % n]))
    }

    fn self_intersects(&self) -> bool {
        let edges: Vec<_> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Neighbouring edges share a vertex; only a collinear fold-back counts.
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    let shared_ok = if j == i + 1 { b == c } else { a == d };
                    if !shared_ok || collinear_overlap(edges[i], edges[j]) {
                        return true;
                    }
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return true;
                }
            }
        }
        false
    }

    /// Even-odd containment test. Boundary points may report either way;
    /// callers that need distance treat the boundary through the edges.
    pub fn contains_point(&self, p: &Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Point(Point),
    Polyline(Polyline),
    Polygon(Polygon),
}

impl Shape {
    pub fn point(x: f64, y: f64) -> Result<Shape, GeometryError> {
        let p = Point::new(x, y);
        if !p.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Shape::Point(p))
    }

    pub fn polyline(vertices: Vec<Point>) -> Result<Shape, GeometryError> {
        Polyline::new(vertices).map(Shape::Polyline)
    }

    pub fn polygon(ring: Vec<Point>) -> Result<Shape, GeometryError> {
        Polygon::new(ring).map(Shape::Polygon)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Point(_) => "point",
            Shape::Polyline(_) => "polyline",
            Shape::Polygon(_) => "polygon",
        }
    }

    pub fn vertices(&self) -> &[Point] {
        match self {
            Shape::Point(p) => std::slice::from_ref(p),
            Shape::Polyline(l) => l.vertices(),
            Shape::Polygon(g) => g.ring(),
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        bounding_box(self)
    }
}

impl fmt::Display for Shape {
    /// Well-known text.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn coords(f: &mut fmt::Formatter<'_>, pts: &[Point]) -> fmt::Result {
            for (i, p) in pts.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{} {}", p.x, p.y)?;
            }
            Ok(())
        }
        match self {
            Shape::Point(p) => write!(f, "POINT({} {})", p.x, p.y),
            Shape::Polyline(l) => {
                f.write_str("LINESTRING(")?;
                coords(f, l.vertices())?;
                f.write_str(")")
            }
            Shape::Polygon(g) => {
                f.write_str("POLYGON((")?;
                coords(f, g.ring())?;
                write!(f, ", {} {}))", g.ring[0].x, g.ring[0].y)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        debug_assert!(min_x <= max_x && min_y <= max_y);
        BoundingBox { min_x, min_y, max_x, max_y }
    }

    /// The identity for [`BoundingBox::union`].
    pub const EMPTY: BoundingBox = BoundingBox {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.min_x <= other.min_x
            && self.min_y <= other.min_y
            && self.max_x >= other.max_x
            && self.max_y >= other.max_y
    }

    pub fn center(&self) -> Point {
        Point::new((self.min_x + self.max_x) * 0.5, (self.min_y + self.max_y) * 0.5)
    }
}

pub fn bounding_box(shape: &Shape) -> BoundingBox {
    shape.vertices().iter().fold(BoundingBox::EMPTY, |b, p| BoundingBox {
        min_x: b.min_x.min(p.x),
        min_y: b.min_y.min(p.y),
        max_x: b.max_x.max(p.x),
        max_y: b.max_y.max(p.y),
    })
}

/// Minimum distance between two boxes; zero when they overlap or touch.
pub fn box_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let dx = (b.min_x - a.max_x).max(a.min_x - b.max_x).max(0.0);
    let dy = (b.min_y - a.max_y).max(a.min_y - b.max_y).max(0.0);
    if dx == 0.0 {
        dy
    } else if dy == 0.0 {
        dx
    } else {
        dx.hypot(dy)
    }
}

/// Minimum Euclidean distance between the point sets of two shapes.
/// Polygon interiors belong to the shape.
pub fn distance(a: &Shape, b: &Shape) -> f64 {
    use Shape::*;
    match (a, b) {
        (Point(p), Point(q)) => p.distance(q),
        (Point(p), Polyline(l)) | (Polyline(l), Point(p)) => point_polyline(p, l),
        (Point(p), Polygon(g)) | (Polygon(g), Point(p)) => point_polygon(p, g),
        (Polyline(l), Polyline(m)) => min_over_pairs(l.segments(), || m.segments()),
        (Polyline(l), Polygon(g)) | (Polygon(g), Polyline(l)) => {
            if l.vertices().iter().any(|v| g.contains_point(v)) {
                0.0
            } else {
                min_over_pairs(l.segments(), || g.edges())
            }
        }
        (Polygon(g), Polygon(h)) => {
            if g.ring().iter().any(|v| h.contains_point(v))
                || h.ring().iter().any(|v| g.contains_point(v))
            {
                0.0
            } else {
                min_over_pairs(g.edges(), || h.edges())
            }
        }
    }
}

fn point_polyline(p: &Point, l: &Polyline) -> f64 {
    l.segments()
        .map(|(a, b)| point_segment(p, &a, &b))
        .fold(f64::INFINITY, f64::min)
}

fn point_polygon(p: &Point, g: &Polygon) -> f64 {
    if g.contains_point(p) {
        return 0.0;
    }
    g.edges()
        .map(|(a, b)| point_segment(p, &a, &b))
        .fold(f64::INFINITY, f64::min)
}

fn min_over_pairs<I, J, F>(left: I, right: F) -> f64
where
    I: Iterator<Item = (Point, Point)>,
    J: Iterator<Item = (Point, Point)>,
    F: Fn() -> J,
{
    let mut best = f64::INFINITY;
    for (a, b) in left {
        for (c, d) in right() {
            best = best.min(segment_segment(&a, &b, &c, &d));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}

/// Distance to the closest point of `a..b`; a zero-length
/// segment degenerates to its endpoint.
pub fn point_segment(p: &Point, a: &Point, b: &Point) -> f64 {
    let (ux, uy) = (b.x - a.x, b.y - a.y);
    let len2 = ux * ux + uy * uy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p.x - a.x) * ux + (p.y - a.y) * uy) / len2;
    // Endpoints are returned as given: `a + 1.0 * (b - a)` need not equal `b`.
    if t <= 0.0 {
        return p.distance(a);
    }
    if t >= 1.0 {
        return p.distance(b);
    }
    p.distance(&Point::new(a.x + t * ux, a.y + t * uy))
}

/// In the plane the minimum between two non-crossing segments is always
/// attained at an endpoint of one of them.
pub fn segment_segment(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    if segments_intersect(*a, *b, *c, *d) {
        return 0.0;
    }
    point_segment(a, c, d)
        .min(point_segment(b, c, d))
        .min(point_segment(c, a, b))
        .min(point_segment(d, a, b))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Two edges sharing a vertex that fold back onto each other.
fn collinear_overlap(e: (Point, Point), f: (Point, Point)) -> bool {
    let (a, b) = e;
    let (c, d) = f;
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    let (shared, p, q) = if b == c {
        (b, a, d)
    } else if a == d {
        (a, b, c)
    } else {
        return true;
    };
    // Same direction away from the shared vertex means overlap.
    let dot = (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y);
    dot > 0.0
}
