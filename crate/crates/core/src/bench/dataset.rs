//! Seeded synthetic layers: roads, traffic features, POIs and accidents.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BenchError;
use crate::geometry::{Point, Shape};
use crate::store::{Catalog, CatalogError, Entity, EntityKey, EntityRelation};

pub const ACCIDENTS: &str = "accidents";
pub const TRAFFIC: &str = "traffic";
pub const ROADS: &str = "roads";
pub const POIS: &str = "pois";

/// Generator parameters, read from and written as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub seed: u64,
    pub width: f64,
    pub height: f64,
    /// Size of the accident pool that samples are drawn from.
    pub accidents: usize,
    pub crossings: usize,
    pub traffic_signals: usize,
    pub other_traffic: usize,
    pub roads: usize,
    pub road_vertices_min: usize,
    pub road_vertices_max: usize,
    pub pois: usize,
    pub schools: usize,
    /// Lattice spacing of road vertices, in metres.
    pub block: f64,
    pub poi_clusters: usize,
    pub poi_cluster_radius: f64,
    /// Fraction of accidents placed on a road next to a traffic feature.
    pub accident_traffic_share: f64,
    /// Fraction of accidents placed on a road next to a POI cluster.
    pub accident_poi_share: f64,
    /// Fraction of signals placed beside a crossing.
    pub signal_at_crossing_share: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            seed: 42,
            width: 40_000.0,
            height: 40_000.0,
            accidents: 16_384,
            crossings: 30,
            traffic_signals: 14,
            other_traffic: 10,
            roads: 400,
            road_vertices_min: 4,
            road_vertices_max: 12,
            pois: 4_000,
            schools: 150,
            block: 200.0,
            poi_clusters: 100,
            poi_cluster_radius: 150.0,
            accident_traffic_share: 0.4,
            accident_poi_share: 0.2,
            signal_at_crossing_share: 0.5,
        }
    }
}

macro_rules! spec_fields {
    ($m:ident) => {
        $m!(seed, width, height, accidents, crossings, traffic_signals, other_traffic, roads, road_vertices_min,
            road_vertices_max, pois, schools, block, poi_clusters, poi_cluster_radius, accident_traffic_share,
            accident_poi_share, signal_at_crossing_share)
    };
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        macro_rules! write_fields {
            ($($k:ident),*) => { $( writeln!(f, "{} = {}", stringify!($k), self.$k)?; )* };
        }
        spec_fields!(write_fields);
        Ok(())
    }
}

impl FromStr for DatasetSpec {
    type Err = BenchError;

    /// Unlisted keys keep their defaults; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self, BenchError> {
        let mut spec = DatasetSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| BenchError::Spec { line: i + 1, message: m };
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            macro_rules! set_field {
                ($($f:ident),*) => {
                    match k {
                        $( stringify!($f) => {
                            spec.$f = v.parse().map_err(|_| bad(format!("bad value `{v}` for `{k}`")))?;
                        } )*
                        _ => return Err(bad(format!("unknown key `{k}`"))),
                    }
                };
            }
            spec_fields!(set_field);
        }
        spec.check()?;
        Ok(spec)
    }
}

impl DatasetSpec {
    pub fn check(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Spec { line: 0, message: m.to_string() });
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return bad("extent must be positive");
        }
        if !(self.block > 0.0 && self.block < self.width.min(self.height)) {
            return bad("block must be positive and smaller than the extent");
        }
        if self.road_vertices_min < 2 || self.road_vertices_min > self.road_vertices_max {
            return bad("road vertex range must satisfy 2 <= min <= max");
        }
        for share in [self.accident_traffic_share, self.accident_poi_share, self.signal_at_crossing_share] {
            if !(0.0..=1.0).contains(&share) {
                return bad("shares must lie in [0, 1]");
            }
        }
        if self.accident_traffic_share + self.accident_poi_share > 1.0 {
            return bad("accident shares must sum to at most 1");
        }
        if self.roads == 0 && self.crossings + self.traffic_signals + self.other_traffic + self.accidents + self.pois + self.schools > 0 {
            return bad("features are placed along roads, so roads must be > 0");
        }
        if self.poi_clusters == 0 && self.pois + self.schools > 0 {
            return bad("poi_clusters must be > 0 when there are POIs");
        }
        Ok(())
    }
}

/// Codes written by the generator.
pub mod codes {
    pub const CROSSING: u16 = 5204;
    pub const TRAFFIC_SIGNAL: u16 = 5201;
    /// Stops, mini-roundabouts, speed cameras, street lamps.
    pub const OTHER_TRAFFIC: [u16; 4] = [5203, 5206, 5207, 5209];
    pub const SCHOOL: u16 = 2082;
    /// Non-school POIs, including other education codes.
    pub const OTHER_POI: [u16; 10] = [2081, 2083, 2084, 2101, 2301, 2302, 2303, 2501, 2502, 2701];
    pub const ROAD: [u16; 5] = [5111, 5112, 5113, 5114, 5115];
}

/// The four generated layers, each sorted by id.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub accidents: EntityRelation,
    pub traffic: EntityRelation,
    pub roads: EntityRelation,
    pub pois: EntityRelation,
}

impl Dataset {
    pub fn layers(&self) -> [&EntityRelation; 4] {
        [&self.accidents, &self.traffic, &self.roads, &self.pois]
    }

    /// Registers all layers under their category names.
    pub fn register(&self, catalog: &Catalog) -> Result<(), CatalogError> {
        for l in self.layers() {
            catalog.register_entities(l.clone())?;
        }
        Ok(())
    }
}

fn round_cm(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn pt(x: f64, y: f64) -> Point {
    Point::new(round_cm(x), round_cm(y))
}

struct Road {
    vertices: Vec<Point>,
}

fn random_walk(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let nx = (spec.width / spec.block).floor() as i64;
    let ny = (spec.height / spec.block).floor() as i64;
    let (mut i, mut j) = (rng.gen_range(0..=nx), rng.gen_range(0..=ny));
    let k = rng.gen_range(spec.road_vertices_min..=spec.road_vertices_max);
    let mut cells = vec![(i, j)];
    let mut last: Option<(i64, i64)> = None;
    const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    while cells.len() < k {
        let options: Vec<(i64, i64)> = DIRS
            .iter()
            .copied()
            .filter(|&(di, dj)| last != Some((-di, -dj)))
            .filter(|&(di, dj)| (0..=nx).contains(&(i + di)) && (0..=ny).contains(&(j + dj)))
            .collect();
        let (di, dj) = options[rng.gen_range(0..options.len())];
        // Runs of one to three blocks keep roads mostly straight.
        let run = rng.gen_range(1..=3);
        for _ in 0..run {
            if cells.len() == k || !(0..=nx).contains(&(i + di)) || !(0..=ny).contains(&(j + dj)) {
                break;
            }
            i += di;
            j += dj;
            cells.push((i, j));
        }
        last = Some((di, dj));
    }
    cells.into_iter().map(|(i, j)| pt(i as f64 * spec.block, j as f64 * spec.block)).collect()
}

fn offset_disk(rng: &mut ChaCha8Rng, c: Point, radius: f64) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    pt(c.x + r * a.cos(), c.y + r * a.sin())
}

/// A point on the road, `along` metres from vertex `v` towards a neighbour,
/// displaced sideways by at most `lateral`.
fn on_road(rng: &mut ChaCha8Rng, road: &Road, v: usize, along: f64, lateral: f64) -> Point {
    let n = road.vertices.len();
    let w = if v + 1 < n && (v == 0 || rng.gen_bool(0.5)) { v + 1 } else { v - 1 };
    let (a, b) = (road.vertices[v], road.vertices[w]);
    let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
    let t = along.min(len) / len;
    let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
    let side = rng.gen_range(-lateral..=lateral);
    pt(a.x + t * (b.x - a.x) - uy * side, a.y + t * (b.y - a.y) + ux * side)
}

fn point_entity(cat: &str, id: u64, p: Point, code: Option<u16>) -> Entity {
    Entity::new(EntityKey::new(cat, id), Shape::Point(p), code).expect("generated codes are valid")
}

/// Deterministic layers for `spec`.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset, BenchError> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let roads: Vec<Road> = (0..spec.roads).map(|_| Road { vertices: random_walk(spec, &mut rng) }).collect();
    let road_entities = roads
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let code = codes::ROAD[rng.gen_range(0..codes::ROAD.len())];
            let shape = Shape::polyline(r.vertices.clone()).expect("walks have at least two vertices");
            Entity::new(EntityKey::new(ROADS, i as u64), shape, Some(code)).expect("valid code")
        })
        .collect();

    let random_vertex = |rng: &mut ChaCha8Rng| {
        let r = rng.gen_range(0..roads.len());
        (r, rng.gen_range(0..roads[r].vertices.len()))
    };

    // Traffic features sit on road vertices; (road, vertex) is kept for placing accidents.
    let mut traffic = Vec::new();
    let mut anchors_of_traffic = Vec::new();
    for i in 0..spec.crossings {
        let (r, v) = random_vertex(&mut rng);
        let p = offset_disk(&mut rng, roads[r].vertices[v], 2.0);
        traffic.push(point_entity(TRAFFIC, i as u64, p, Some(codes::CROSSING)));
        anchors_of_traffic.push((r, v));
    }
    for _ in 0..spec.traffic_signals {
        let id = traffic.len() as u64;
        let beside_crossing = spec.crossings > 0 && rng.gen_bool(spec.signal_at_crossing_share);
        let (r, v, p) = if beside_crossing {
            let c = rng.gen_range(0..spec.crossings);
            let (r, v) = anchors_of_traffic[c];
            {
                let along = rng.gen_range(10.0..60.0);
                (r, v, on_road(&mut rng, &roads[r], v, along, 2.0))
            }
        } else {
            let (r, v) = random_vertex(&mut rng);
            (r, v, offset_disk(&mut rng, roads[r].vertices[v], 2.0))
        };
        traffic.push(point_entity(TRAFFIC, id, p, Some(codes::TRAFFIC_SIGNAL)));
        anchors_of_traffic.push((r, v));
    }
    for _ in 0..spec.other_traffic {
        let id = traffic.len() as u64;
        let (r, v) = random_vertex(&mut rng);
        let p = offset_disk(&mut rng, roads[r].vertices[v], 2.0);
        let code = codes::OTHER_TRAFFIC[rng.gen_range(0..codes::OTHER_TRAFFIC.len())];
        traffic.push(point_entity(TRAFFIC, id, p, Some(code)));
        anchors_of_traffic.push((r, v));
    }

    let clusters: Vec<(usize, usize)> =
        if spec.pois + spec.schools > 0 { (0..spec.poi_clusters).map(|_| random_vertex(&mut rng)).collect() } else { Vec::new() };
    let mut pois = Vec::with_capacity(spec.pois + spec.schools);
    for i in 0..spec.pois + spec.schools {
        let (r, v) = clusters[rng.gen_range(0..clusters.len())];
        let p = offset_disk(&mut rng, roads[r].vertices[v], spec.poi_cluster_radius);
        let code = if i < spec.pois { codes::OTHER_POI[rng.gen_range(0..codes::OTHER_POI.len())] } else { codes::SCHOOL };
        pois.push(point_entity(POIS, i as u64, p, Some(code)));
    }

    let mut accidents = Vec::with_capacity(spec.accidents);
    for i in 0..spec.accidents {
        let u: f64 = rng.gen();
        let p = if u < spec.accident_traffic_share && !anchors_of_traffic.is_empty() {
            let (r, v) = anchors_of_traffic[rng.gen_range(0..anchors_of_traffic.len())];
            let along = rng.gen_range(0.0..80.0);
            on_road(&mut rng, &roads[r], v, along, 4.0)
        } else if u < spec.accident_traffic_share + spec.accident_poi_share && !clusters.is_empty() {
            let (r, v) = clusters[rng.gen_range(0..clusters.len())];
            let along = rng.gen_range(0.0..spec.poi_cluster_radius);
            on_road(&mut rng, &roads[r], v, along, 4.0)
        } else {
            let (r, v) = random_vertex(&mut rng);
            let along = rng.gen_range(0.0..spec.block);
            on_road(&mut rng, &roads[r], v, along, 4.0)
        };
        accidents.push(point_entity(ACCIDENTS, i as u64, p, None));
    }

    Ok(Dataset {
        accidents: EntityRelation::from_entities(ACCIDENTS, accidents)?,
        traffic: EntityRelation::from_entities(TRAFFIC, traffic)?,
        roads: EntityRelation::from_entities(ROADS, road_entities)?,
        pois: EntityRelation::from_entities(POIS, pois)?,
    })
}

/// Uniform sample of `n` members without replacement, kept in id order and
/// named after the pool's category.
pub fn sample_accidents(pool: &EntityRelation, n: usize, seed: u64) -> Result<EntityRelation, BenchError> {
    if n > pool.len() {
        return Err(BenchError::SampleTooLarge { requested: n, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, pool.len(), n).into_vec();
    picks.sort_unstable();
    let members: Vec<Arc<Entity>> = picks.into_iter().map(|i| pool.members()[i].clone()).collect();
    Ok(EntityRelation::new(pool.category().to_string(), pool.category().clone(), members)?)
}

/// Draws a sample and installs it as the catalog's accidents relation.
pub fn install_sample(catalog: &Catalog, pool: &EntityRelation, n: usize, seed: u64) -> Result<Arc<EntityRelation>, BenchError> {
    Ok(catalog.replace_entities(sample_accidents(pool, n, seed)?)?)
}
