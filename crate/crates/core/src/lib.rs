//! Spatio-logical query evaluation over categorised spatial entities.
//!
//! Queries are written in a small Datalog-like language and run by one of two
//! engines: [`engine_entity`] resolves one entity binding at a time with
//! backtracking, [`engine_relation`] evaluates each goal over whole relations.

pub mod bench;
pub mod cli;
pub mod engine_entity;
pub mod engine_relation;
mod error;
pub mod geometry;
pub mod qlang;
pub mod relalg;
pub mod spatial_index;
pub mod store;

pub use geometry::{distance, BoundingBox, Point, Shape};
pub use spatial_index::{Counters, SpatialIndex};
pub use store::{Catalog, Entity, EntityKey, EntityRelation, RelationshipRelation};
pub use error::{Error, Result};
