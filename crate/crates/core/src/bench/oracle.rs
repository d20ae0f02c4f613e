//! Brute-force answers for the four scenarios: all-pairs distance scans with
//! code filters, no index and no query language.

use std::collections::BTreeSet;

use crate::geometry::distance;
use crate::spatial_index::{CLOSEBY_DISTANCE, NEAR_DISTANCE};
use crate::store::{entity_is_type, Entity, EntityRelation, TypeSpec};

use super::Scenario;

pub type RowSet = BTreeSet<Vec<u64>>;

/// Type specs each scenario consults.
pub struct OracleTypes<'a> {
    pub crossing: &'a TypeSpec,
    pub signal: &'a TypeSpec,
    pub school: &'a TypeSpec,
}

fn pairs<'a>(
    left: &'a EntityRelation,
    right: &'a EntityRelation,
    d: f64,
) -> impl Iterator<Item = (&'a Entity, &'a Entity)> + 'a {
    let same = left.category() == right.category();
    left.members().iter().flat_map(move |l| {
        right
            .members()
            .iter()
            .filter(move |r| !(same && r.key.id == l.key.id) && distance(&l.shape, &r.shape) <= d)
            .map(move |r| (&**l, &**r))
    })
}

pub fn answer(
    scenario: Scenario,
    accidents: &EntityRelation,
    traffic: &EntityRelation,
    roads: &EntityRelation,
    pois: &EntityRelation,
    types: &OracleTypes<'_>,
) -> RowSet {
    match scenario {
        Scenario::S1 => pairs(accidents, traffic, NEAR_DISTANCE)
            .filter(|(_, t)| entity_is_type(types.crossing, t))
            .map(|(a, t)| vec![a.key.id, t.key.id])
            .collect(),
        Scenario::S2 => {
            let acc_roads: Vec<(u64, u64)> =
                pairs(accidents, roads, CLOSEBY_DISTANCE).map(|(a, r)| (a.key.id, r.key.id)).collect();
            let traffic_roads: Vec<(u64, u64)> =
                pairs(traffic, roads, CLOSEBY_DISTANCE).map(|(t, r)| (t.key.id, r.key.id)).collect();
            let mut out = RowSet::new();
            for &(a, r) in &acc_roads {
                for &(t, r2) in &traffic_roads {
                    if r == r2 {
                        out.insert(vec![a, r, t]);
                    }
                }
            }
            out
        }
        Scenario::S3 => {
            let mut out = RowSet::new();
            for (a, p1) in pairs(accidents, pois, NEAR_DISTANCE) {
                for p2 in pois.members() {
                    if p2.key.id != p1.key.id
                        && entity_is_type(types.school, p2)
                        && distance(&p1.shape, &p2.shape) <= NEAR_DISTANCE
                    {
                        out.insert(vec![a.key.id, p1.key.id, p2.key.id]);
                    }
                }
            }
            out
        }
        Scenario::S4 => pairs(accidents, traffic, NEAR_DISTANCE)
            .filter(|(_, t)| entity_is_type(types.crossing, t))
            .filter(|(_, t)| {
                !traffic.members().iter().any(|o| {
                    o.key.id != t.key.id && entity_is_type(types.signal, o) && distance(&t.shape, &o.shape) <= NEAR_DISTANCE
                })
            })
            .map(|(a, t)| vec![a.key.id, t.key.id])
            .collect(),
    }
}
