//! Entity-relations, relationship-relations and the catalog that names them.

mod load;
mod typespec;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::geometry::Shape;
use crate::spatial_index::SpatialIndex;

pub use load::{
    entities_to_geojson, load_entities_csv, load_entities_geojson, parse_wkt, read_entities_csv, read_entities_geojson,
    LoadError, LoadOptions,
};
pub use typespec::{
    default_typespecs, parse_typespecs, CodeRange, TypeSpec, TypeSpecError, DEFAULT_TYPESPECS,
};

/// Prefix reserved for relations the engines generate.
pub const GENERATED_PREFIX: &str = "_tmp";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` is not an {expected}")]
    WrongKind { name: String, expected: &'static str },
    #[error("relation `{0}` already registered")]
    Duplicate(String),
    #[error("relation name `{0}` is reserved for generated relations")]
    Reserved(String),
    #[error("invalid relation name `{0}`")]
    InvalidName(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown entity {0}")]
    UnknownEntity(EntityKey),
    #[error("duplicate id {id} in `{relation}`")]
    DuplicateId { relation: String, id: u64 },
    #[error("entity {key} does not belong to category `{category}`")]
    CategoryMismatch { key: EntityKey, category: String },
    #[error("duplicate attribute `{0}` in schema")]
    DuplicateAttribute(String),
    #[error("schema must have at least one attribute")]
    EmptySchema,
    #[error("row {row} has {got} values, schema has {expected}")]
    Arity { row: usize, got: usize, expected: usize },
    #[error("osm code {0} outside 1000..=9999")]
    BadCode(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityKey {
    pub category: Arc<str>,
    pub id: u64,
}

impl EntityKey {
    pub fn new(category: impl Into<Arc<str>>, id: u64) -> Self {
        EntityKey { category: category.into(), id }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(\"{}\", {})", self.category, self.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Str(String),
    Int(i64),
    Real(f64),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Str(s) => f.write_str(s),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Real(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub key: EntityKey,
    pub shape: Shape,
    pub osm_code: Option<u16>,
    pub attributes: BTreeMap<String, Scalar>,
}

impl Entity {
    pub fn new(key: EntityKey, shape: Shape, osm_code: Option<u16>) -> Result<Self, CatalogError> {
        if let Some(c) = osm_code {
            if !(1000..=9999).contains(&c) {
                return Err(CatalogError::BadCode(c.into()));
            }
        }
        Ok(Entity { key, shape, osm_code, attributes: BTreeMap::new() })
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: Scalar) -> Self {
        self.attributes.insert(name.into(), value);
        self
    }
}

/// True iff the entity carries a code inside the type spec's code set.
pub fn entity_is_type(spec: &TypeSpec, entity: &Entity) -> bool {
    entity.osm_code.is_some_and(|c| spec.matches(c))
}

/// A named, immutable collection of entities of one category.
#[derive(Debug, Clone)]
pub struct EntityRelation {
    name: String,
    category: Arc<str>,
    members: Vec<Arc<Entity>>,
    id_index: HashMap<u64, usize>,
}

impl EntityRelation {
    pub fn new(
        name: impl Into<String>,
        category: impl Into<Arc<str>>,
        members: Vec<Arc<Entity>>,
    ) -> Result<Self, CatalogError> {
        let name = name.into();
        let category = category.into();
        let mut id_index = HashMap::with_capacity(members.len());
        for (pos, e) in members.iter().enumerate() {
            if e.key.category != category {
                return Err(CatalogError::CategoryMismatch {
                    key: e.key.clone(),
                    category: category.to_string(),
                });
            }
            if id_index.insert(e.key.id, pos).is_some() {
                return Err(CatalogError::DuplicateId { relation: name, id: e.key.id });
            }
        }
        Ok(EntityRelation { name, category, members, id_index })
    }

    /// Builds a base relation whose name is also the members' category.
    pub fn from_entities(name: &str, entities: Vec<Entity>) -> Result<Self, CatalogError> {
        EntityRelation::new(name, name, entities.into_iter().map(Arc::new).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn category(&self) -> &Arc<str> {
        &self.category
    }

    pub fn members(&self) -> &[Arc<Entity>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&Arc<Entity>> {
        self.id_index.get(&id).map(|&pos| &self.members[pos])
    }

    pub fn position(&self, id: u64) -> Option<usize> {
        self.id_index.get(&id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().map(|e| e.key.id)
    }

    /// `id,code,wkt` plus one column per attribute name, in the loader's format.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let attrs: std::collections::BTreeSet<&str> =
            self.members.iter().flat_map(|e| e.attributes.keys().map(String::as_str)).collect();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "code", "wkt"].into_iter().chain(attrs.iter().copied()))?;
        for e in &self.members {
            let mut rec = vec![e.key.id.to_string(), e.osm_code.map(|c| c.to_string()).unwrap_or_default(), e.shape.to_string()];
            rec.extend(attrs.iter().map(|a| e.attributes.get(*a).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn renamed(&self, name: String) -> EntityRelation {
        EntityRelation { name, ..self.clone() }
    }
}

/// A named bag of foreign-key tuples. Rows are stored flat, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationshipRelation {
    name: String,
    schema: Vec<String>,
    /// Category the keys of each column point into, when known.
    lineage: Vec<Option<Arc<str>>>,
    data: Vec<u64>,
}

impl RelationshipRelation {
    pub fn new(
        name: impl Into<String>,
        schema: Vec<String>,
        rows: Vec<Vec<u64>>,
    ) -> Result<Self, CatalogError> {
        let arity = schema.len();
        let mut data = Vec::with_capacity(rows.len() * arity);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != arity {
                return Err(CatalogError::Arity { row: i, got: row.len(), expected: arity });
            }
            data.extend(row);
        }
        let lineage = vec![None; arity];
        RelationshipRelation::from_flat(name, schema, lineage, data)
    }

    pub fn from_flat(
        name: impl Into<String>,
        schema: Vec<String>,
        lineage: Vec<Option<Arc<str>>>,
        data: Vec<u64>,
    ) -> Result<Self, CatalogError> {
        if schema.is_empty() {
            return Err(CatalogError::EmptySchema);
        }
        for (i, a) in schema.iter().enumerate() {
            if schema[..i].contains(a) {
                return Err(CatalogError::DuplicateAttribute(a.clone()));
            }
        }
        assert_eq!(lineage.len(), schema.len(), "lineage per column");
        if !data.len().is_multiple_of(schema.len()) {
            return Err(CatalogError::Arity {
                row: data.len() / schema.len(),
                got: data.len() % schema.len(),
                expected: schema.len(),
            });
        }
        Ok(RelationshipRelation { name: name.into(), schema, lineage, data })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn lineage(&self) -> &[Option<Arc<str>>] {
        &self.lineage
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn column(&self, attr: &str) -> Option<usize> {
        self.schema.iter().position(|a| a == attr)
    }

    pub fn row(&self, i: usize) -> &[u64] {
        let a = self.arity();
        &self.data[i * a..(i + 1) * a]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u64> {
        self.data.chunks_exact(self.arity())
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.rows().map(<[u64]>::to_vec).collect()
    }

    pub(crate) fn renamed(&self, name: String) -> RelationshipRelation {
        RelationshipRelation { name, ..self.clone() }
    }

    /// Header line followed by one line per tuple.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.schema)?;
        for row in self.rows() {
            w.write_record(row.iter().map(u64::to_string))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug)]
pub struct EntityEntry {
    relation: Arc<EntityRelation>,
    index: OnceLock<Arc<SpatialIndex>>,
}

impl EntityEntry {
    pub fn relation(&self) -> &Arc<EntityRelation> {
        &self.relation
    }

    /// Built on first use, then shared.
    pub fn index(&self) -> &Arc<SpatialIndex> {
        self.index.get_or_init(|| Arc::new(SpatialIndex::build(self.relation.clone())))
    }
}

#[derive(Debug, Clone)]
pub enum RelationRef {
    Entity(Arc<EntityRelation>),
    Relationship(Arc<RelationshipRelation>),
}

impl RelationRef {
    pub fn name(&self) -> &str {
        match self {
            RelationRef::Entity(r) => r.name(),
            RelationRef::Relationship(r) => r.name(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RelationRef::Entity(r) => r.len(),
            RelationRef::Relationship(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Default)]
struct State {
    entities: HashMap<String, Arc<EntityEntry>>,
    relationships: HashMap<String, Arc<RelationshipRelation>>,
    types: HashMap<String, Arc<TypeSpec>>,
}

impl State {
    fn name_taken(&self, name: &str) -> bool {
        self.entities.contains_key(name) || self.relationships.contains_key(name)
    }
}

/// Registry of named relations and type specs.
///
/// Registration takes the write lock; readers hand out `Arc`s so a relation
/// stays usable after it is dropped from the catalog.
#[derive(Debug)]
pub struct Catalog {
    state: RwLock<State>,
    next_generated: AtomicU64,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::new()
    }
}

impl Catalog {
    /// A catalog preloaded with the shipped type specs.
    pub fn new() -> Self {
        let catalog = Catalog::empty();
        for spec in default_typespecs().into_values() {
            catalog.register_type_spec(spec);
        }
        catalog
    }

    pub fn empty() -> Self {
        Catalog { state: RwLock::new(State::default()), next_generated: AtomicU64::new(0) }
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    /// A name no user relation can carry.
    pub fn fresh_name(&self) -> String {
        let n = self.next_generated.fetch_add(1, Ordering::Relaxed);
        format!("{GENERATED_PREFIX}{n}")
    }

    fn check_user_name(name: &str) -> Result<(), CatalogError> {
        if name.is_empty() {
            return Err(CatalogError::InvalidName(name.into()));
        }
        if name.starts_with(GENERATED_PREFIX) {
            return Err(CatalogError::Reserved(name.into()));
        }
        Ok(())
    }

    pub fn register_entities(&self, relation: EntityRelation) -> Result<Arc<EntityRelation>, CatalogError> {
        Self::check_user_name(relation.name())?;
        self.insert_entities(relation)
    }

    fn insert_entities(&self, relation: EntityRelation) -> Result<Arc<EntityRelation>, CatalogError> {
        let mut st = self.write();
        if st.name_taken(relation.name()) {
            return Err(CatalogError::Duplicate(relation.name().into()));
        }
        let relation = Arc::new(relation);
        let entry = EntityEntry { relation: relation.clone(), index: OnceLock::new() };
        st.entities.insert(relation.name().to_string(), Arc::new(entry));
        Ok(relation)
    }

    /// Registers under a fresh generated name, whatever name `relation` had.
    pub fn register_generated_entities(&self, relation: EntityRelation) -> Arc<EntityRelation> {
        let named = relation.renamed(self.fresh_name());
        self.insert_entities(named).expect("generated names are unique")
    }

    /// Swaps the entity-relation registered under `relation.name()`; used to
    /// install a fresh accident sample between benchmark sizes.
    pub fn replace_entities(&self, relation: EntityRelation) -> Result<Arc<EntityRelation>, CatalogError> {
        Self::check_user_name(relation.name())?;
        let mut st = self.write();
        if st.relationships.contains_key(relation.name()) {
            return Err(CatalogError::Duplicate(relation.name().into()));
        }
        let relation = Arc::new(relation);
        let entry = EntityEntry { relation: relation.clone(), index: OnceLock::new() };
        st.entities.insert(relation.name().to_string(), Arc::new(entry));
        Ok(relation)
    }

    /// `name: None` assigns a generated name.
    pub fn register_relationship(
        &self,
        name: Option<&str>,
        schema: Vec<String>,
        rows: Vec<Vec<u64>>,
    ) -> Result<Arc<RelationshipRelation>, CatalogError> {
        let name = match name {
            Some(n) => {
                Self::check_user_name(n)?;
                n.to_string()
            }
            None => self.fresh_name(),
        };
        self.insert_relationship(RelationshipRelation::new(name, schema, rows)?)
    }

    pub fn register_generated_relationship(&self, relation: RelationshipRelation) -> Arc<RelationshipRelation> {
        let named = relation.renamed(self.fresh_name());
        self.insert_relationship(named).expect("generated names are unique")
    }

    fn insert_relationship(&self, relation: RelationshipRelation) -> Result<Arc<RelationshipRelation>, CatalogError> {
        let mut st = self.write();
        if st.name_taken(relation.name()) {
            return Err(CatalogError::Duplicate(relation.name().into()));
        }
        let relation = Arc::new(relation);
        st.relationships.insert(relation.name().to_string(), relation.clone());
        Ok(relation)
    }

    pub fn register_type_spec(&self, spec: TypeSpec) {
        self.write().types.insert(spec.name().to_string(), Arc::new(spec));
    }

    pub fn load_type_specs(&self, text: &str) -> Result<usize, TypeSpecError> {
        let specs = parse_typespecs(text)?;
        let n = specs.len();
        for spec in specs.into_values() {
            self.register_type_spec(spec);
        }
        Ok(n)
    }

    pub fn type_spec(&self, name: &str) -> Result<Arc<TypeSpec>, CatalogError> {
        self.read().types.get(name).cloned().ok_or_else(|| CatalogError::UnknownType(name.into()))
    }

    pub fn type_spec_names(&self) -> Vec<String> {
        let mut names: Vec<_> = self.read().types.keys().cloned().collect();
        names.sort();
        names
    }

    pub fn get_relation(&self, name: &str) -> Result<RelationRef, CatalogError> {
        let st = self.read();
        if let Some(e) = st.entities.get(name) {
            return Ok(RelationRef::Entity(e.relation.clone()));
        }
        if let Some(r) = st.relationships.get(name) {
            return Ok(RelationRef::Relationship(r.clone()));
        }
        Err(CatalogError::UnknownRelation(name.into()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.read().name_taken(name)
    }

    pub fn entity_entry(&self, name: &str) -> Result<Arc<EntityEntry>, CatalogError> {
        let st = self.read();
        match st.entities.get(name) {
            Some(e) => Ok(e.clone()),
            None if st.relationships.contains_key(name) => {
                Err(CatalogError::WrongKind { name: name.into(), expected: "entity-relation" })
            }
            None => Err(CatalogError::UnknownRelation(name.into())),
        }
    }

    pub fn entity_relation(&self, name: &str) -> Result<Arc<EntityRelation>, CatalogError> {
        self.entity_entry(name).map(|e| e.relation.clone())
    }

    pub fn relationship_relation(&self, name: &str) -> Result<Arc<RelationshipRelation>, CatalogError> {
        let st = self.read();
        match st.relationships.get(name) {
            Some(r) => Ok(r.clone()),
            None if st.entities.contains_key(name) => {
                Err(CatalogError::WrongKind { name: name.into(), expected: "relationship-relation" })
            }
            None => Err(CatalogError::UnknownRelation(name.into())),
        }
    }

    pub fn spatial_index(&self, name: &str) -> Result<Arc<SpatialIndex>, CatalogError> {
        Ok(self.entity_entry(name)?.index().clone())
    }

    /// Looks the key up in the base relation named after its category.
    pub fn get_entity(&self, key: &EntityKey) -> Result<Arc<Entity>, CatalogError> {
        let rel = self.entity_relation(&key.category)?;
        rel.get(key.id).cloned().ok_or_else(|| CatalogError::UnknownEntity(key.clone()))
    }

    /// Members of `input` of type `spec`, in order, under a fresh name.
    pub fn filter_by_type(&self, spec: &TypeSpec, input: &EntityRelation) -> Arc<EntityRelation> {
        let members: Vec<_> =
            input.members().iter().filter(|e| entity_is_type(spec, e)).cloned().collect();
        let rel = EntityRelation::new(String::new(), input.category().clone(), members)
            .expect("subset of a valid relation");
        self.register_generated_entities(rel)
    }

    /// Removes every generated relation; returns how many were dropped.
    pub fn drop_generated(&self) -> usize {
        let mut st = self.write();
        let before = st.entities.len() + st.relationships.len();
        st.entities.retain(|k, _| !k.starts_with(GENERATED_PREFIX));
        st.relationships.retain(|k, _| !k.starts_with(GENERATED_PREFIX));
        before - st.entities.len() - st.relationships.len()
    }

    pub fn remove(&self, name: &str) -> bool {
        let mut st = self.write();
        st.entities.remove(name).is_some() || st.relationships.remove(name).is_some()
    }

    /// Total registered relations of both kinds.
    pub fn relation_count(&self) -> usize {
        let st = self.read();
        st.entities.len() + st.relationships.len()
    }

    pub fn entity_relation_names(&self) -> Vec<String> {
        let mut v: Vec<_> = self.read().entities.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn relationship_relation_names(&self) -> Vec<String> {
        let mut v: Vec<_> = self.read().relationships.keys().cloned().collect();
        v.sort();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_entity(cat: &str, id: u64, x: f64, code: Option<u16>) -> Entity {
        Entity::new(EntityKey::new(cat, id), Shape::point(x, 0.0).unwrap(), code).unwrap()
    }

    #[test]
    fn entity_type_predicate() {
        let specs = default_typespecs();
        let school = point_entity("pois", 0, 0.0, Some(2082));
        let bare = point_entity("accidents", 0, 0.0, None);
        assert!(entity_is_type(&specs["school"], &school));
        assert!(entity_is_type(&specs["education"], &school));
        assert!(!entity_is_type(&specs["school"], &bare));
        assert!(!entity_is_type(&specs["education"], &bare));
    }

    #[test]
    fn filter_by_type_registers_subset() {
        let cat = Catalog::new();
        let rel = EntityRelation::from_entities(
            "pois",
            vec![point_entity("pois", 0, 0.0, Some(2082)), point_entity("pois", 1, 1.0, Some(5204))],
        )
        .unwrap();
        let rel = cat.register_entities(rel).unwrap();
        let school = cat.type_spec("school").unwrap();
        let out = cat.filter_by_type(&school, &rel);
        assert_eq!(out.ids().collect::<Vec<_>>(), vec![0]);
        assert!(out.name().starts_with(GENERATED_PREFIX));
        assert_eq!(out.category().as_ref(), "pois");

        let nothing = TypeSpec::single("none", 9999);
        let empty = cat.filter_by_type(&nothing, &rel);
        assert!(empty.is_empty());
        assert!(cat.contains(empty.name()));
        assert_eq!(rel.len(), 2);
    }

    #[test]
    fn catalog_round_trip_and_errors() {
        let cat = Catalog::new();
        let schema = vec!["Acc".to_string(), "Road".to_string()];
        let r = cat.register_relationship(Some("acc_roads"), schema.clone(), vec![vec![1, 2], vec![3, 4]]).unwrap();
        match cat.get_relation("acc_roads").unwrap() {
            RelationRef::Relationship(got) => assert_eq!(*got, *r),
            other => panic!("wrong kind {other:?}"),
        }
        assert_eq!(cat.get_relation("nope").unwrap_err(), CatalogError::UnknownRelation("nope".into()));
        assert!(matches!(
            cat.register_relationship(Some("acc_roads"), schema.clone(), vec![]),
            Err(CatalogError::Duplicate(_))
        ));
        assert!(matches!(
            cat.register_relationship(Some("_tmp9"), schema.clone(), vec![]),
            Err(CatalogError::Reserved(_))
        ));
        assert!(matches!(
            cat.register_relationship(None, schema, vec![vec![1]]),
            Err(CatalogError::Arity { row: 0, got: 1, expected: 2 })
        ));
        assert!(matches!(
            cat.register_relationship(None, vec!["A".into(), "A".into()], vec![]),
            Err(CatalogError::DuplicateAttribute(_))
        ));
    }

    #[test]
    fn get_entity_by_key() {
        let cat = Catalog::new();
        let rel = EntityRelation::from_entities(
            "accidents",
            vec![point_entity("accidents", 0, 0.0, None), point_entity("accidents", 1, 7.0, None)],
        )
        .unwrap();
        cat.register_entities(rel).unwrap();
        let e = cat.get_entity(&EntityKey::new("accidents", 1)).unwrap();
        assert_eq!(e.shape, Shape::point(7.0, 0.0).unwrap());
        assert!(matches!(cat.get_entity(&EntityKey::new("accidents", 5)), Err(CatalogError::UnknownEntity(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = EntityRelation::from_entities(
            "a",
            vec![point_entity("a", 3, 0.0, None), point_entity("a", 3, 1.0, None)],
        )
        .unwrap_err();
        assert_eq!(err, CatalogError::DuplicateId { relation: "a".into(), id: 3 });
    }

    #[test]
    fn drop_generated_keeps_user_relations() {
        let cat = Catalog::new();
        cat.register_relationship(Some("keep"), vec!["A".into()], vec![]).unwrap();
        cat.register_relationship(None, vec!["A".into()], vec![]).unwrap();
        cat.register_relationship(None, vec!["A".into()], vec![]).unwrap();
        assert_eq!(cat.drop_generated(), 2);
        assert_eq!(cat.relationship_relation_names(), vec!["keep".to_string()]);
    }

    #[test]
    fn relationship_csv_export() {
        let r = RelationshipRelation::new("r", vec!["Acc".into(), "Crossing".into()], vec![vec![1, 2], vec![3, 4]]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "Acc,Crossing\n1,2\n3,4\n");
    }
}
