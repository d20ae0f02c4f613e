//! Tuple-at-a-time evaluation: goals run left to right, each spatial goal
//! binds at most one entity per step, and failure backtracks to the most
//! recent open choice.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::distance;
use crate::qlang::{entity_term, parse, validate, CheckedQuery, Goal, Paradigm, Term};
use crate::spatial_index::{Counters, CLOSEBY_DISTANCE, NEAR_DISTANCE};
use crate::store::{entity_is_type, Catalog, Entity, EntityKey, EntityRelation, TypeSpec};

pub use crate::qlang::expand_rules;

/// A bound variable: an entity id or a distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Id(u64),
    Real(f64),
}

impl Value {
    pub fn as_id(&self) -> Option<u64> {
        match self {
            Value::Id(i) => Some(*i),
            Value::Real(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Id(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
        }
    }
}

/// An entity argument after compilation: the logical layer only ever holds
/// keys, never shapes.
#[derive(Debug, Clone)]
enum EntityArg {
    Slot { category: Arc<str>, slot: usize },
    Const(EntityKey),
}

#[derive(Debug)]
enum Op {
    /// Binds `slot` to each member of `category` passing the optional type filter.
    Scan { category: Arc<str>, slot: usize, filter: Option<Arc<TypeSpec>> },
    /// Binds `out` to each member of `target` within `threshold` of `src`.
    Probe { src: EntityArg, target: Arc<str>, out: usize, threshold: f64 },
    /// Both sides bound: one exact distance test.
    Within { a: EntityArg, b: EntityArg, threshold: f64 },
    Distance { a: EntityArg, b: EntityArg, out: usize, check: bool },
    TypeTest { spec: Arc<TypeSpec>, e: EntityArg },
    Not(Vec<Op>),
}

/// A query compiled against a catalog, ready to enumerate solutions.
#[derive(Debug)]
pub struct EntityPlan<'c> {
    catalog: &'c Catalog,
    ops: Vec<Op>,
    slots: usize,
    answer_vars: Vec<String>,
    answer_slots: Vec<usize>,
    /// Unfolded goal index of each top-level op, for diagnostics.
    goal_of_op: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Id,
    Real,
}

struct Compiler<'c> {
    catalog: &'c Catalog,
    slots: HashMap<String, (usize, Kind)>,
    bound: Vec<bool>,
}

fn eval_err(goal: usize, message: impl Into<String>) -> Error {
    Error::Eval { goal, message: message.into() }
}


impl<'c> Compiler<'c> {
    fn slot(&mut self, var: &str, kind: Kind, goal: usize) -> Result<usize> {
        if let Some(&(s, k)) = self.slots.get(var) {
            if k != kind {
                return Err(eval_err(goal, format!("`{var}` is used both as an entity id and as a distance")));
            }
            return Ok(s);
        }
        let s = self.slots.len();
        self.slots.insert(var.to_string(), (s, kind));
        self.bound.push(false);
        Ok(s)
    }

    fn is_bound(&self, var: &str) -> bool {
        self.slots.get(var).is_some_and(|&(s, _)| self.bound[s])
    }

    fn relation(&self, cat: &str) -> Result<Arc<EntityRelation>> {
        Ok(self.catalog.entity_relation(cat)?)
    }

    /// Resolves an entity term whose id, if a variable, is already bound.
    fn bound_arg(&mut self, t: &Term, goal: usize) -> Result<EntityArg> {
        let (cat, id) = entity_term(t).ok_or_else(|| eval_err(goal, format!("bad entity term `{t}`")))?;
        let category = self.relation(cat)?.category().clone();
        Ok(match id {
            Term::Int(i) => EntityArg::Const(EntityKey::new(category, *i)),
            Term::Var(v) => EntityArg::Slot { slot: self.slot(v, Kind::Id, goal)?, category },
            _ => unreachable!("entity_term admits ids only"),
        })
    }

    fn unbound_var<'t>(&self, t: &'t Term) -> Option<&'t str> {
        match entity_term(t) {
            Some((_, Term::Var(v))) if !self.is_bound(v) => Some(v),
            _ => None,
        }
    }

    fn mark(&mut self, slot: usize) {
        self.bound[slot] = true;
    }

    fn compile(&mut self, goals: &[Goal], at: Option<usize>, ops: &mut Vec<Op>, goal_of: &mut Vec<usize>) -> Result<()> {
        for (j, g) in goals.iter().enumerate() {
            let ix = at.unwrap_or(j + 1);
            let before = ops.len();
            match g {
                Goal::Not(inner) => {
                    let saved = self.bound.clone();
                    let mut sub = Vec::new();
                    self.compile(inner, Some(ix), &mut sub, &mut Vec::new())?;
                    // Bindings made inside a negation never escape it.
                    let grown = self.bound.len();
                    self.bound = saved;
                    self.bound.resize(grown, false);
                    ops.push(Op::Not(sub));
                }
                Goal::Call(c) => match c.name.as_str() {
                    "near" | "closeby" => {
                        let threshold = if c.name == "near" { NEAR_DISTANCE } else { CLOSEBY_DISTANCE };
                        self.compile_spatial(&c.args[0], &c.args[1], threshold, ix, ops)?;
                    }
                    "distance" => {
                        let a = self.bound_arg(&c.args[0], ix)?;
                        let b = self.bound_arg(&c.args[1], ix)?;
                        let Term::Var(d) = &c.args[2] else { unreachable!("validated") };
                        let check = self.is_bound(d);
                        let out = self.slot(d, Kind::Real, ix)?;
                        self.mark(out);
                        ops.push(Op::Distance { a, b, out, check });
                    }
                    "entity_type" => {
                        let Term::Atom(name) = &c.args[0] else { unreachable!("validated") };
                        let spec = self.catalog.type_spec(name)?;
                        if let Some(v) = self.unbound_var(&c.args[1]) {
                            let (cat, _) = entity_term(&c.args[1]).expect("checked");
                            let category = self.relation(cat)?.category().clone();
                            let slot = self.slot(v, Kind::Id, ix)?;
                            self.mark(slot);
                            ops.push(Op::Scan { category, slot, filter: Some(spec) });
                        } else {
                            let e = self.bound_arg(&c.args[1], ix)?;
                            ops.push(Op::TypeTest { spec, e });
                        }
                    }
                    other => return Err(eval_err(ix, format!("`{other}` is not an entity-mode predicate"))),
                },
            }
            goal_of.extend(std::iter::repeat_n(ix, ops.len() - before));
        }
        Ok(())
    }

    fn compile_spatial(&mut self, left: &Term, right: &Term, threshold: f64, ix: usize, ops: &mut Vec<Op>) -> Result<()> {
        let (lcat, _) = entity_term(left).expect("validated");
        let (rcat, _) = entity_term(right).expect("validated");
        let (lfree, rfree) = (self.unbound_var(left), self.unbound_var(right));
        // Both ids bound: a plain test. Otherwise probe from the bound side,
        // scanning the left side first when neither is bound.
        match (lfree, rfree) {
            (None, None) => {
                let a = self.bound_arg(left, ix)?;
                let b = self.bound_arg(right, ix)?;
                ops.push(Op::Within { a, b, threshold });
            }
            (lv, Some(rv)) => {
                if let Some(lv) = lv {
                    let category = self.relation(lcat)?.category().clone();
                    let slot = self.slot(lv, Kind::Id, ix)?;
                    self.mark(slot);
                    ops.push(Op::Scan { category, slot, filter: None });
                    if lv == rv {
                        // Same variable on both sides: a test of the scanned entity.
                        ops.push(Op::Within { a: self.bound_arg(left, ix)?, b: self.bound_arg(right, ix)?, threshold });
                        return Ok(());
                    }
                }
                let src = self.bound_arg(left, ix)?;
                let target = self.relation(rcat)?.category().clone();
                let out = self.slot(rv, Kind::Id, ix)?;
                self.mark(out);
                ops.push(Op::Probe { src, target, out, threshold });
            }
            (Some(lv), None) => {
                let src = self.bound_arg(right, ix)?;
                let target = self.relation(lcat)?.category().clone();
                let out = self.slot(lv, Kind::Id, ix)?;
                self.mark(out);
                ops.push(Op::Probe { src, target, out, threshold });
            }
        }
        Ok(())
    }
}

impl<'c> EntityPlan<'c> {
    pub fn compile(query: &CheckedQuery, catalog: &'c Catalog) -> Result<EntityPlan<'c>> {
        if query.paradigm != Paradigm::Entity {
            return Err(eval_err(1, "query was checked for relation mode"));
        }
        let mut c = Compiler { catalog, slots: HashMap::new(), bound: Vec::new() };
        let mut ops = Vec::new();
        let mut goal_of_op = Vec::new();
        c.compile(&query.goals, None, &mut ops, &mut goal_of_op)?;
        let answer_slots = query.answer_vars.iter().map(|v| c.slots[v.as_str()].0).collect();
        Ok(EntityPlan { catalog, ops, slots: c.slots.len(), answer_vars: query.answer_vars.clone(), answer_slots, goal_of_op })
    }

    pub fn answer_vars(&self) -> &[String] {
        &self.answer_vars
    }

    /// Lazily enumerates solutions in evaluation order.
    pub fn solutions(&self) -> Solutions<'_> {
        Solutions {
            plan: self,
            machine: Machine::new(&self.ops),
            env: vec![Value::Id(0); self.slots],
            counters: Counters::default(),
            emitted: 0,
        }
    }

    /// Number of compiled operations per unfolded goal, in goal order.
    pub fn ops_per_goal(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &g in &self.goal_of_op {
            match out.last_mut() {
                Some((last, n)) if *last == g => *n += 1,
                _ => out.push((g, 1)),
            }
        }
        out
    }
}

fn resolve(arg: &EntityArg, env: &[Value]) -> Option<EntityKey> {
    match arg {
        EntityArg::Const(k) => Some(k.clone()),
        EntityArg::Slot { category, slot } => match env[*slot] {
            Value::Id(id) => Some(EntityKey::new(category.clone(), id)),
            Value::Real(_) => None,
        },
    }
}

/// The spatial side of the paradigm boundary. Every call takes entity keys,
/// looks shapes up in the catalog, and hands keys back.
struct SpatialLayer<'c> {
    catalog: &'c Catalog,
}

impl SpatialLayer<'_> {
    fn entity(&self, key: &EntityKey) -> Option<Arc<Entity>> {
        self.catalog.get_entity(key).ok()
    }

    fn members(&self, category: &str, filter: Option<&TypeSpec>) -> Vec<u64> {
        let Ok(rel) = self.catalog.entity_relation(category) else { return Vec::new() };
        rel.members().iter().filter(|e| filter.is_none_or(|s| entity_is_type(s, e))).map(|e| e.key.id).collect()
    }

    /// One index probe: ids in `target` within `d` of `probe`, self excluded.
    fn within(&self, probe: &EntityKey, target: &str, d: f64, counters: &mut Counters) -> Vec<u64> {
        let (Some(p), Ok(index)) = (self.entity(probe), self.catalog.spatial_index(target)) else {
            return Vec::new();
        };
        let mut ids = index.query_ids(&p.shape, d, counters).expect("thresholds are valid constants");
        if *index.relation().category() == probe.category {
            ids.retain(|&id| id != probe.id);
        }
        ids
    }

    fn distance(&self, a: &EntityKey, b: &EntityKey, counters: &mut Counters) -> Option<f64> {
        let (x, y) = (self.entity(a)?, self.entity(b)?);
        counters.distance_evals += 1;
        Some(distance(&x.shape, &y.shape))
    }

    fn is_type(&self, spec: &TypeSpec, key: &EntityKey) -> bool {
        self.entity(key).is_some_and(|e| entity_is_type(spec, &e))
    }
}

struct Choice {
    pc: usize,
    slot: usize,
    candidates: Vec<u64>,
    next: usize,
}

enum Step {
    Continue,
    Fail,
    Branch { slot: usize, candidates: Vec<u64> },
}

struct Machine<'p> {
    ops: &'p [Op],
    stack: Vec<Choice>,
    pc: usize,
    started: bool,
}

impl<'p> Machine<'p> {
    fn new(ops: &'p [Op]) -> Self {
        Machine { ops, stack: Vec::new(), pc: 0, started: false }
    }

    /// Advances to the next solution; `false` once the search space is exhausted.
    fn next(&mut self, layer: &SpatialLayer<'_>, env: &mut [Value], counters: &mut Counters) -> bool {
        if self.started {
            if !self.backtrack(env) {
                return false;
            }
        } else {
            self.started = true;
        }
        loop {
            if self.pc == self.ops.len() {
                return true;
            }
            match step(&self.ops[self.pc], layer, env, counters) {
                Step::Continue => self.pc += 1,
                Step::Fail => {
                    if !self.backtrack(env) {
                        return false;
                    }
                }
                Step::Branch { slot, candidates } => {
                    if candidates.is_empty() {
                        if !self.backtrack(env) {
                            return false;
                        }
                        continue;
                    }
                    env[slot] = Value::Id(candidates[0]);
                    self.stack.push(Choice { pc: self.pc, slot, candidates, next: 1 });
                    self.pc += 1;
                }
            }
        }
    }

    fn backtrack(&mut self, env: &mut [Value]) -> bool {
        while let Some(top) = self.stack.last_mut() {
            if top.next < top.candidates.len() {
                env[top.slot] = Value::Id(top.candidates[top.next]);
                top.next += 1;
                self.pc = top.pc + 1;
                return true;
            }
            self.stack.pop();
        }
        self.pc = self.ops.len();
        false
    }
}

fn step(op: &Op, layer: &SpatialLayer<'_>, env: &mut [Value], counters: &mut Counters) -> Step {
    match op {
        Op::Scan { category, slot, filter } => {
            Step::Branch { slot: *slot, candidates: layer.members(category, filter.as_deref()) }
        }
        Op::Probe { src, target, out, threshold } => match resolve(src, env) {
            Some(probe) => Step::Branch { slot: *out, candidates: layer.within(&probe, target, *threshold, counters) },
            None => Step::Fail,
        },
        Op::Within { a, b, threshold } => {
            let (Some(x), Some(y)) = (resolve(a, env), resolve(b, env)) else { return Step::Fail };
            if x == y {
                return Step::Fail;
            }
            match layer.distance(&x, &y, counters) {
                Some(d) if d <= *threshold => Step::Continue,
                _ => Step::Fail,
            }
        }
        Op::Distance { a, b, out, check } => {
            let (Some(x), Some(y)) = (resolve(a, env), resolve(b, env)) else { return Step::Fail };
            let Some(d) = layer.distance(&x, &y, counters) else { return Step::Fail };
            if *check {
                return if env[*out] == Value::Real(d) { Step::Continue } else { Step::Fail };
            }
            env[*out] = Value::Real(d);
            Step::Continue
        }
        Op::TypeTest { spec, e } => match resolve(e, env) {
            Some(key) if layer.is_type(spec, &key) => Step::Continue,
            _ => Step::Fail,
        },
        Op::Not(sub) => {
            if Machine::new(sub).next(layer, env, counters) {
                Step::Fail
            } else {
                Step::Continue
            }
        }
    }
}

/// Iterator over the answer tuples of an [`EntityPlan`].
pub struct Solutions<'p> {
    plan: &'p EntityPlan<'p>,
    machine: Machine<'p>,
    env: Vec<Value>,
    counters: Counters,
    emitted: u64,
}

impl Solutions<'_> {
    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }
}

impl Iterator for Solutions<'_> {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        let layer = SpatialLayer { catalog: self.plan.catalog };
        if !self.machine.next(&layer, &mut self.env, &mut self.counters) {
            return None;
        }
        self.emitted += 1;
        Some(self.plan.answer_slots.iter().map(|&s| self.env[s]).collect())
    }
}

/// All answers of an entity-mode query.
#[derive(Debug, Clone)]
pub struct EntityOutcome {
    pub answer_vars: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub counters: Counters,
}

/// Parses, checks, compiles and exhausts an entity-mode query.
pub fn run_query(text: &str, catalog: &Catalog) -> Result<EntityOutcome> {
    let program = parse(text)?;
    let checked = validate(&program, Some(catalog), Paradigm::Entity)?;
    run(&checked, catalog)
}

pub fn run(query: &CheckedQuery, catalog: &Catalog) -> Result<EntityOutcome> {
    let plan = EntityPlan::compile(query, catalog)?;
    let mut solutions = plan.solutions();
    let rows: Vec<Vec<Value>> = solutions.by_ref().collect();
    Ok(EntityOutcome { answer_vars: plan.answer_vars.clone(), rows, counters: solutions.counters() })
}
