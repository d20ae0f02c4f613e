//! Static packed R-tree over an entity-relation, bulk loaded with
//! sort-tile-recursive packing.

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{bounding_box, box_distance, distance, BoundingBox, Shape};
use crate::store::{EntityKey, EntityRelation};

pub const NODE_CAPACITY: usize = 16;

/// Threshold of the `near` predicates, in metres.
pub const NEAR_DISTANCE: f64 = 100.0;
/// Threshold of the `closeby` predicates, in metres.
pub const CLOSEBY_DISTANCE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("distance threshold must be finite and non-negative, got {0}")]
    BadThreshold(f64),
}

/// Work performed by spatial predicates.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Counters {
    pub index_probes: u64,
    pub distance_evals: u64,
}

impl std::ops::AddAssign for Counters {
    fn add_assign(&mut self, rhs: Counters) {
        self.index_probes += rhs.index_probes;
        self.distance_evals += rhs.distance_evals;
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bbox: BoundingBox,
    /// Child range into the level below, or into `entries` for leaves.
    start: u32,
    end: u32,
}

#[derive(Debug)]
pub struct SpatialIndex {
    relation: Arc<EntityRelation>,
    /// (box, member position), in packed order.
    entries: Vec<(BoundingBox, u32)>,
    /// `levels[0]` are the leaves; the last level holds the single root.
    levels: Vec<Vec<Node>>,
}

fn check_threshold(d: f64) -> Result<(), IndexError> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(IndexError::BadThreshold(d))
    }
}

/// One STR pass: orders `items` in place so that consecutive runs of
/// `NODE_CAPACITY` form tiles, and returns the tile ranges.
fn str_pack<T>(items: &mut [T], bbox: impl Fn(&T) -> BoundingBox) -> Vec<(usize, usize)> {
    let n = items.len();
    let node_count = n.div_ceil(NODE_CAPACITY);
    let slices = (node_count as f64).sqrt().ceil() as usize;
    let slice_len = slices * NODE_CAPACITY;
    let key = |t: &T, axis: usize| {
        let c = bbox(t).center();
        if axis == 0 {
            c.x
        } else {
            c.y
        }
    };
    items.sort_by(|a, b| key(a, 0).total_cmp(&key(b, 0)));
    let mut ranges = Vec::with_capacity(node_count);
    let mut start = 0;
    while start < n {
        let end = (start + slice_len).min(n);
        items[start..end].sort_by(|a, b| key(a, 1).total_cmp(&key(b, 1)));
        let mut s = start;
        while s < end {
            let e = (s + NODE_CAPACITY).min(end);
            ranges.push((s, e));
            s = e;
        }
        start = end;
    }
    ranges
}

impl SpatialIndex {
    pub fn build(relation: Arc<EntityRelation>) -> SpatialIndex {
        let mut entries: Vec<(BoundingBox, u32)> = relation
            .members()
            .iter()
            .enumerate()
            .map(|(i, e)| (bounding_box(&e.shape), i as u32))
            .collect();
        let mut levels = Vec::new();
        if !entries.is_empty() {
            let tiles = str_pack(&mut entries, |e| e.0);
            let mut level: Vec<Node> = tiles
                .into_iter()
                .map(|(s, e)| Node {
                    bbox: entries[s..e].iter().fold(BoundingBox::EMPTY, |b, x| b.union(&x.0)),
                    start: s as u32,
                    end: e as u32,
                })
                .collect();
            while level.len() > 1 {
                let tiles = str_pack(&mut level, |n| n.bbox);
                let parents: Vec<Node> = tiles
                    .into_iter()
                    .map(|(s, e)| Node {
                        bbox: level[s..e].iter().fold(BoundingBox::EMPTY, |b, x| b.union(&x.bbox)),
                        start: s as u32,
                        end: e as u32,
                    })
                    .collect();
                levels.push(level);
                level = parents;
            }
            levels.push(level);
        }
        SpatialIndex { relation, entries, levels }
    }

    pub fn relation(&self) -> &Arc<EntityRelation> {
        &self.relation
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    /// Member positions whose shape lies within `d` of `probe`, ascending by id.
    /// Counts one probe plus one exact distance per candidate surviving the box test.
    pub fn query_positions(
        &self,
        probe: &Shape,
        d: f64,
        counters: &mut Counters,
    ) -> Result<Vec<usize>, IndexError> {
        check_threshold(d)?;
        counters.index_probes += 1;
        let mut out = Vec::new();
        let Some(root_level) = self.levels.last() else {
            return Ok(out);
        };
        let probe_box = bounding_box(probe);
        let members = self.relation.members();
        // (level, node index)
        let mut stack: Vec<(usize, usize)> = (0..root_level.len()).map(|i| (self.levels.len() - 1, i)).collect();
        while let Some((lvl, idx)) = stack.pop() {
            let node = &self.levels[lvl][idx];
            if box_distance(&node.bbox, &probe_box) > d {
                continue;
            }
            if lvl == 0 {
                for &(ebox, pos) in &self.entries[node.start as usize..node.end as usize] {
                    if box_distance(&ebox, &probe_box) > d {
                        continue;
                    }
                    counters.distance_evals += 1;
                    if distance(probe, &members[pos as usize].shape) <= d {
                        out.push(pos as usize);
                    }
                }
            } else {
                stack.extend((node.start as usize..node.end as usize).map(|c| (lvl - 1, c)));
            }
        }
        out.sort_unstable_by_key(|&p| members[p].key.id);
        Ok(out)
    }

    pub fn query_ids(&self, probe: &Shape, d: f64, counters: &mut Counters) -> Result<Vec<u64>, IndexError> {
        let members = self.relation.members();
        Ok(self.query_positions(probe, d, counters)?.into_iter().map(|p| members[p].key.id).collect())
    }

    /// Exactly `{ e : distance(probe, e.shape) <= d }`.
    pub fn within_distance(&self, probe: &Shape, d: f64) -> Result<Vec<EntityKey>, IndexError> {
        let mut c = Counters::default();
        let members = self.relation.members();
        Ok(self.query_positions(probe, d, &mut c)?.into_iter().map(|p| members[p].key.clone()).collect())
    }

    /// Checks the structural invariants: every member in exactly one leaf and
    /// every node box containing its children.
    pub fn check_invariants(&self) -> bool {
        let mut seen = vec![false; self.relation.len()];
        for &(_, pos) in &self.entries {
            if std::mem::replace(&mut seen[pos as usize], true) {
                return false;
            }
        }
        if !seen.iter().all(|&s| s) {
            return false;
        }
        for (lvl, nodes) in self.levels.iter().enumerate() {
            for n in nodes {
                let ok = if lvl == 0 {
                    self.entries[n.start as usize..n.end as usize].iter().all(|e| n.bbox.contains(&e.0))
                } else {
                    self.levels[lvl - 1][n.start as usize..n.end as usize].iter().all(|c| n.bbox.contains(&c.bbox))
                };
                if !ok || n.end - n.start > NODE_CAPACITY as u32 {
                    return false;
                }
            }
        }
        self.levels.last().is_none_or(|root| root.len() == 1)
    }
}

/// Index nested-loop join: one probe per left member, pairs ordered by left
/// position then ascending right id. A pair naming the same entity on both
/// sides is skipped.
pub fn distance_join(
    left: &EntityRelation,
    right: &SpatialIndex,
    d: f64,
    counters: &mut Counters,
) -> Result<Vec<(u64, u64)>, IndexError> {
    check_threshold(d)?;
    let same_category = left.category() == right.relation().category();
    let mut pairs = Vec::new();
    for l in left.members() {
        for r in right.query_ids(&l.shape, d, counters)? {
            if same_category && r == l.key.id {
                continue;
            }
            pairs.push((l.key.id, r));
        }
    }
    Ok(pairs)
}
