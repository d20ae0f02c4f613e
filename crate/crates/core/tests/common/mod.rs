//! Test-side oracles. Distance code here is written from scratch and shares
//! nothing with the library beyond reading coordinates out of its shapes.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use spatiolog::geometry::{Point, Shape};
use spatiolog::store::EntityRelation;

pub type Rows = BTreeSet<Vec<u64>>;

/// Codes of the shipped type specs, restated independently.
pub const CROSSING: u16 = 5204;
pub const SIGNAL: u16 = 5201;
pub const SCHOOL: u16 = 2082;

#[derive(Clone, Copy, Debug)]
pub struct P(pub f64, pub f64);

#[derive(Clone, Debug)]
pub enum G {
    Pt(P),
    Line(Vec<P>),
    Area(Vec<P>),
}

pub fn to_g(s: &Shape) -> G {
    let vs: Vec<P> = s.vertices().iter().map(|p| P(p.x, p.y)).collect();
    match s {
        Shape::Point(_) => G::Pt(vs[0]),
        Shape::Polyline(_) => G::Line(vs),
        Shape::Polygon(_) => G::Area(vs),
    }
}

fn sub(a: P, b: P) -> P {
    P(a.0 - b.0, a.1 - b.1)
}

fn dot(a: P, b: P) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn norm(a: P) -> f64 {
    dot(a, a).sqrt()
}

/// Foot-of-perpendicular form: endpoint distance outside the slab, line distance inside.
pub fn pt_seg(p: P, a: P, b: P) -> f64 {
    let ab = sub(b, a);
    if dot(sub(p, a), ab) <= 0.0 {
        return norm(sub(p, a));
    }
    if dot(sub(p, b), sub(a, b)) <= 0.0 {
        return norm(sub(p, b));
    }
    cross(ab, sub(p, a)).abs() / norm(ab)
}

fn orient(a: P, b: P, c: P) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_box(a: P, b: P, p: P) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn seg_touch(a: P, b: P, c: P, d: P) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_box(a, b, c))
        || (o2 == 0.0 && on_box(a, b, d))
        || (o3 == 0.0 && on_box(c, d, a))
        || (o4 == 0.0 && on_box(c, d, b))
}

fn seg_seg(a: P, b: P, c: P, d: P) -> f64 {
    if seg_touch(a, b, c, d) {
        return 0.0;
    }
    pt_seg(a, c, d).min(pt_seg(b, c, d)).min(pt_seg(c, a, b)).min(pt_seg(d, a, b))
}

/// Winding number, so it does not share the library's even-odd loop.
fn inside(p: P, ring: &[P]) -> bool {
    let mut w = 0i32;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        if a.1 <= p.1 {
            if b.1 > p.1 && orient(a, b, p) > 0.0 {
                w += 1;
            }
        } else if b.1 <= p.1 && orient(a, b, p) < 0.0 {
            w -= 1;
        }
    }
    w != 0
}

fn segs(g: &G) -> Vec<(P, P)> {
    match g {
        G::Pt(p) => vec![(*p, *p)],
        G::Line(v) => v.windows(2).map(|w| (w[0], w[1])).collect(),
        G::Area(v) => (0..v.len()).map(|i| (v[i], v[(i + 1) % v.len()])).collect(),
    }
}

fn verts(g: &G) -> Vec<P> {
    match g {
        G::Pt(p) => vec![*p],
        G::Line(v) | G::Area(v) => v.clone(),
    }
}

pub fn dist(a: &G, b: &G) -> f64 {
    if let (G::Pt(p), G::Pt(q)) = (a, b) {
        return norm(sub(*p, *q));
    }
    for (x, y) in [(a, b), (b, a)] {
        if let G::Area(ring) = y {
            if verts(x).iter().any(|v| inside(*v, ring)) {
                return 0.0;
            }
        }
    }
    let mut best = f64::INFINITY;
    for (p, q) in segs(a) {
        for (r, s) in segs(b) {
            best = best.min(seg_seg(p, q, r, s));
        }
    }
    best
}

/// `(id, code, shape)` view of a layer.
pub struct Layer {
    pub items: Vec<(u64, Option<u16>, G)>,
}

impl Layer {
    pub fn of(r: &EntityRelation) -> Layer {
        Layer { items: r.members().iter().map(|e| (e.key.id, e.osm_code, to_g(&e.shape))).collect() }
    }

    fn with_code(&self, code: u16) -> impl Iterator<Item = &(u64, Option<u16>, G)> {
        self.items.iter().filter(move |(_, c, _)| *c == Some(code))
    }
}

/// Pairs within `d`, skipping identical entities when both sides are the same layer.
fn within<'a>(left: &'a Layer, right: &'a Layer, same: bool, d: f64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (i, _, g) in &left.items {
        for (j, _, h) in &right.items {
            if !(same && i == j) && dist(g, h) <= d {
                out.push((*i, *j));
            }
        }
    }
    out
}

pub struct World {
    pub accidents: Layer,
    pub traffic: Layer,
    pub roads: Layer,
    pub pois: Layer,
}

pub fn scenario_oracle(k: u8, w: &World) -> Rows {
    match k {
        1 => {
            let crossings = Layer { items: w.traffic.with_code(CROSSING).cloned().collect() };
            within(&w.accidents, &crossings, false, 100.0).into_iter().map(|(a, t)| vec![a, t]).collect()
        }
        2 => {
            let ar = within(&w.accidents, &w.roads, false, 10.0);
            let tr = within(&w.traffic, &w.roads, false, 10.0);
            let mut out = Rows::new();
            for &(a, r) in &ar {
                for &(t, r2) in &tr {
                    if r == r2 {
                        out.insert(vec![a, r, t]);
                    }
                }
            }
            out
        }
        3 => {
            let schools: Vec<_> = w.pois.with_code(SCHOOL).collect();
            let mut out = Rows::new();
            for (a, p1) in within(&w.accidents, &w.pois, false, 100.0) {
                let g1 = &w.pois.items.iter().find(|(i, _, _)| *i == p1).unwrap().2;
                for (s, _, gs) in &schools {
                    if *s != p1 && dist(g1, gs) <= 100.0 {
                        out.insert(vec![a, p1, *s]);
                    }
                }
            }
            out
        }
        4 => {
            let signals: Vec<_> = w.traffic.with_code(SIGNAL).collect();
            let mut out = Rows::new();
            for (a, _, ga) in &w.accidents.items {
                for (t, _, gt) in w.traffic.with_code(CROSSING) {
                    if dist(ga, gt) > 100.0 {
                        continue;
                    }
                    if !signals.iter().any(|(s, _, gs)| s != t && dist(gt, gs) <= 100.0) {
                        out.insert(vec![*a, *t]);
                    }
                }
            }
            out
        }
        _ => panic!("no scenario {k}"),
    }
}

// Random shapes.

pub fn rand_point(rng: &mut impl Rng, extent: f64) -> Point {
    Point::new(rng.gen_range(-extent..extent), rng.gen_range(-extent..extent))
}

/// Star-shaped ring around `c`, which is always simple.
pub fn rand_ring(rng: &mut impl Rng, c: Point, radius: f64) -> Vec<Point> {
    let n = rng.gen_range(3..9);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles
        .into_iter()
        .map(|a| {
            let r = rng.gen_range(0.2 * radius..radius);
            Point::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect()
}

pub fn rand_shape(rng: &mut impl Rng, extent: f64, size: f64) -> Shape {
    loop {
        let c = rand_point(rng, extent);
        let s = match rng.gen_range(0..3) {
            0 => Shape::point(c.x, c.y),
            1 => {
                let n = rng.gen_range(2..7);
                let mut v = vec![c];
                for _ in 1..n {
                    let last = *v.last().unwrap();
                    v.push(Point::new(last.x + rng.gen_range(-size..size), last.y + rng.gen_range(-size..size)));
                }
                Shape::polyline(v)
            }
            _ => Shape::polygon(rand_ring(rng, c, size)),
        };
        if let Ok(s) = s {
            return s;
        }
    }
}
