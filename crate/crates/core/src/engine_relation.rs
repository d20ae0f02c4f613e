//! Set-at-a-time evaluation: every goal consumes whole relations and
//! registers exactly one generated relation in the catalog.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qlang::{parse, validate, CheckedQuery, Goal, Paradigm, Term};
use crate::relalg;
use crate::spatial_index::{distance_join, Counters, CLOSEBY_DISTANCE, NEAR_DISTANCE};
use crate::store::{Catalog, CatalogError, Entity, EntityKey, EntityRelation, RelationRef, RelationshipRelation};

/// Work done by one goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalStats {
    /// 1-based position in the unfolded query.
    pub goal: usize,
    pub predicate: String,
    /// Generated name of the goal's output relation.
    pub output: String,
    /// Size of the first input relation.
    pub left_cardinality: usize,
    pub rows: usize,
    pub counters: Counters,
}

#[derive(Debug, Clone)]
pub struct RelationOutcome {
    /// Output of the last goal.
    pub result: RelationRef,
    /// Query variable to the relation it was bound to.
    pub bindings: Vec<(String, RelationRef)>,
    pub goals: Vec<GoalStats>,
    pub counters: Counters,
}

impl RelationOutcome {
    pub fn binding(&self, var: &str) -> Option<&RelationRef> {
        self.bindings.iter().find(|(v, _)| v == var).map(|(_, r)| r)
    }
}

fn eval_err(goal: usize, message: impl Into<String>) -> Error {
    Error::Eval { goal, message: message.into() }
}

struct Env<'c> {
    catalog: &'c Catalog,
    vars: HashMap<String, RelationRef>,
    order: Vec<String>,
}

impl Env<'_> {
    fn input(&self, t: &Term, goal: usize) -> Result<RelationRef> {
        match t {
            Term::Str(name) => Ok(self.catalog.get_relation(name)?),
            Term::Var(v) => self.vars.get(v).cloned().ok_or_else(|| eval_err(goal, format!("unbound input `{v}`"))),
            other => Err(eval_err(goal, format!("expected a relation, got `{other}`"))),
        }
    }

    fn entities(&self, t: &Term, goal: usize) -> Result<Arc<EntityRelation>> {
        match self.input(t, goal)? {
            RelationRef::Entity(e) => Ok(e),
            RelationRef::Relationship(r) => {
                Err(CatalogError::WrongKind { name: r.name().to_string(), expected: "entity-relation" }.into())
            }
        }
    }

    fn relationship(&self, t: &Term, goal: usize) -> Result<Arc<RelationshipRelation>> {
        match self.input(t, goal)? {
            RelationRef::Relationship(r) => Ok(r),
            RelationRef::Entity(e) => {
                Err(CatalogError::WrongKind { name: e.name().to_string(), expected: "relationship-relation" }.into())
            }
        }
    }

    fn bind(&mut self, t: &Term, r: RelationRef) {
        let Term::Var(v) = t else { unreachable!("outputs are validated variables") };
        self.order.push(v.clone());
        self.vars.insert(v.clone(), r);
    }
}

fn str_arg(t: &Term) -> &str {
    match t {
        Term::Str(s) | Term::Atom(s) => s,
        _ => unreachable!("validated"),
    }
}

fn list_arg(t: &Term) -> &[String] {
    match t {
        Term::List(items) => items,
        _ => unreachable!("validated"),
    }
}

/// Parses, checks and runs a relation-mode query.
pub fn run_query(text: &str, catalog: &Catalog) -> Result<RelationOutcome> {
    let program = parse(text)?;
    let checked = validate(&program, Some(catalog), Paradigm::Relation)?;
    run(&checked, catalog)
}

pub fn run(query: &CheckedQuery, catalog: &Catalog) -> Result<RelationOutcome> {
    if query.paradigm != Paradigm::Relation {
        return Err(eval_err(1, "query was checked for entity mode"));
    }
    let mut env = Env { catalog, vars: HashMap::new(), order: Vec::new() };
    let mut goals = Vec::with_capacity(query.goals.len());
    let mut total = Counters::default();
    let mut last = None;
    for (i, g) in query.goals.iter().enumerate() {
        let ix = i + 1;
        let Goal::Call(c) = g else { return Err(eval_err(ix, "negation is not available in relation mode")) };
        let a = &c.args;
        let mut counters = Counters::default();
        let (out, left_cardinality) = match c.name.as_str() {
            "near_relational" | "closeby_relational" => {
                let d = if c.name == "near_relational" { NEAR_DISTANCE } else { CLOSEBY_DISTANCE };
                let left = env.entities(&a[0], ix)?;
                let right = env.entities(&a[1], ix)?;
                let index = catalog.spatial_index(right.name())?;
                let pairs = distance_join(&left, &index, d, &mut counters)?;
                let schema = match a.get(3) {
                    Some(t) => list_arg(t).to_vec(),
                    None => vec!["id1".to_string(), "id2".to_string()],
                };
                let lineage = vec![Some(left.category().clone()), Some(right.category().clone())];
                let data = pairs.into_iter().flat_map(|(l, r)| [l, r]).collect();
                let rel = RelationshipRelation::from_flat(String::new(), schema, lineage, data)?;
                (RelationRef::Relationship(catalog.register_generated_relationship(rel)), left.len())
            }
            "entity_type_relational" => {
                let spec = catalog.type_spec(str_arg(&a[0]))?;
                let input = env.entities(&a[1], ix)?;
                (RelationRef::Entity(catalog.filter_by_type(&spec, &input)), input.len())
            }
            "filter_by_relationship" => {
                let input = env.entities(&a[0], ix)?;
                let r = env.relationship(&a[1], ix)?;
                let rel = relalg::filter_entities(&input, &r, str_arg(&a[2]), String::new())?;
                (RelationRef::Entity(catalog.register_generated_entities(rel)), input.len())
            }
            "join_relational" => {
                let r1 = env.relationship(&a[0], ix)?;
                let r2 = env.relationship(&a[1], ix)?;
                let cols = a.get(4).map(list_arg);
                let rel = relalg::join(&r1, &r2, str_arg(&a[3]), cols, String::new())?;
                (RelationRef::Relationship(catalog.register_generated_relationship(rel)), r1.len())
            }
            "project_id_relational" => {
                let r = env.relationship(&a[0], ix)?;
                let rel = relalg::project(&r, list_arg(&a[1]), String::new())?;
                (RelationRef::Relationship(catalog.register_generated_relationship(rel)), r.len())
            }
            "minus_relational" => {
                let r1 = env.relationship(&a[0], ix)?;
                let r2 = env.relationship(&a[1], ix)?;
                let rel = relalg::minus(&r1, &r2, String::new())?;
                (RelationRef::Relationship(catalog.register_generated_relationship(rel)), r1.len())
            }
            other => return Err(eval_err(ix, format!("`{other}` is not a relation-mode predicate"))),
        };
        let out_arg = if c.name == "filter_by_relationship" { &a[3] } else { &a[2] };
        total += counters;
        goals.push(GoalStats {
            goal: ix,
            predicate: c.name.clone(),
            output: out.name().to_string(),
            left_cardinality,
            rows: out.len(),
            counters,
        });
        env.bind(out_arg, out.clone());
        last = Some(out);
    }
    let result = last.ok_or_else(|| eval_err(0, "empty query"))?;
    let bindings = env.order.iter().map(|v| (v.clone(), env.vars[v].clone())).collect();
    Ok(RelationOutcome { result, bindings, goals, counters: total })
}

/// Rows of a result relation as key tuples. An entity-relation yields one
/// single-column row per member.
pub fn result_rows(r: &RelationRef) -> Vec<Vec<u64>> {
    match r {
        RelationRef::Entity(e) => e.ids().map(|id| vec![id]).collect(),
        RelationRef::Relationship(r) => r.to_rows(),
    }
}

/// Walks a result one row at a time, resolving every key column back to its
/// entity through the catalog, as a tuple-at-a-time consumer would.
pub struct ResolvedRows<'a> {
    catalog: &'a Catalog,
    relation: RelationRef,
    next: usize,
}

pub fn resolved_rows<'a>(catalog: &'a Catalog, relation: &RelationRef) -> ResolvedRows<'a> {
    ResolvedRows { catalog, relation: relation.clone(), next: 0 }
}

impl Iterator for ResolvedRows<'_> {
    type Item = Result<Vec<Arc<Entity>>>;

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next;
        if i >= self.relation.len() {
            return None;
        }
        self.next += 1;
        Some(match &self.relation {
            RelationRef::Entity(e) => Ok(vec![e.members()[i].clone()]),
            RelationRef::Relationship(r) => r
                .row(i)
                .iter()
                .zip(r.lineage())
                .filter_map(|(&id, cat)| cat.as_ref().map(|c| EntityKey::new(c.clone(), id)))
                .map(|key| self.catalog.get_entity(&key).map_err(Error::from))
                .collect(),
        })
    }
}

/// Runs the query, then consumes its result through [`ResolvedRows`].
/// Returns the outcome and the number of rows consumed.
pub fn run_with_iteration(query: &CheckedQuery, catalog: &Catalog) -> Result<(RelationOutcome, usize)> {
    let outcome = run(query, catalog)?;
    let mut n = 0;
    for row in resolved_rows(catalog, &outcome.result) {
        std::hint::black_box(row?);
        n += 1;
    }
    Ok((outcome, n))
}
