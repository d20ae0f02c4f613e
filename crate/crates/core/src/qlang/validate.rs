//! Rule unfolding and per-paradigm mode checking.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::ast::{positive_vars, Call, Goal, Program, Rule, Term};
use crate::store::Catalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Paradigm {
    /// Tuple-at-a-time: one atom per spatial entity.
    Entity,
    /// Set-at-a-time: atoms denote whole relations.
    Relation,
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Paradigm::Entity => "entity",
            Paradigm::Relation => "relation",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// 1-based index of the offending goal in the unfolded query.
    pub goal: Option<usize>,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.goal {
            Some(g) => write!(f, "goal {g}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn verr(goal: Option<usize>, message: impl Into<String>) -> ValidationError {
    ValidationError { goal, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    InRel,
    OutRel,
    Attr,
    AttrPair,
    AttrList,
    TypeName,
}

struct Builtin {
    name: &'static str,
    paradigm: Paradigm,
    roles: &'static [Role],
    /// Arguments from this position on may be omitted.
    optional_from: usize,
}

use Role::*;

const ENTITY_BUILTINS: &[&str] = &["near", "closeby", "distance", "entity_type"];

const RELATION_BUILTINS: &[Builtin] = &[
    Builtin { name: "near_relational", paradigm: Paradigm::Relation, roles: &[InRel, InRel, OutRel, AttrPair], optional_from: 3 },
    Builtin { name: "closeby_relational", paradigm: Paradigm::Relation, roles: &[InRel, InRel, OutRel, AttrPair], optional_from: 3 },
    Builtin { name: "entity_type_relational", paradigm: Paradigm::Relation, roles: &[TypeName, InRel, OutRel], optional_from: 3 },
    Builtin { name: "filter_by_relationship", paradigm: Paradigm::Relation, roles: &[InRel, InRel, Attr, OutRel], optional_from: 4 },
    Builtin { name: "join_relational", paradigm: Paradigm::Relation, roles: &[InRel, InRel, OutRel, Attr, AttrList], optional_from: 4 },
    Builtin { name: "project_id_relational", paradigm: Paradigm::Relation, roles: &[InRel, AttrList, OutRel], optional_from: 3 },
    Builtin { name: "minus_relational", paradigm: Paradigm::Relation, roles: &[InRel, InRel, OutRel], optional_from: 3 },
];

fn entity_arity(name: &str) -> Option<usize> {
    match name {
        "near" | "closeby" | "entity_type" => Some(2),
        "distance" => Some(3),
        _ => None,
    }
}

fn relation_builtin(name: &str) -> Option<&'static Builtin> {
    RELATION_BUILTINS.iter().find(|b| b.name == name)
}

pub fn builtin_paradigm(name: &str) -> Option<Paradigm> {
    if ENTITY_BUILTINS.contains(&name) {
        Some(Paradigm::Entity)
    } else {
        relation_builtin(name).map(|b| b.paradigm)
    }
}

fn arity_ok(name: &str, n: usize) -> bool {
    if let Some(a) = entity_arity(name) {
        return a == n;
    }
    relation_builtin(name).is_some_and(|b| n >= b.optional_from && n <= b.roles.len())
}

/// A query unfolded into builtin goals and checked for one paradigm.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedQuery {
    pub paradigm: Paradigm,
    pub goals: Vec<Goal>,
    /// Variables of the original query outside negations, in first-occurrence order.
    pub answer_vars: Vec<String>,
    /// Names that only the catalog at run time can resolve.
    pub warnings: Vec<String>,
}

struct Expander<'a> {
    rules: HashMap<&'a str, &'a Rule>,
    stack: Vec<&'a str>,
    fresh: usize,
}

fn substitute(t: &Term, map: &HashMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Tuple(items) => Term::Tuple(items.iter().map(|i| substitute(i, map)).collect()),
        other => other.clone(),
    }
}

fn substitute_goal(g: &Goal, map: &HashMap<String, Term>) -> Goal {
    match g {
        Goal::Call(c) => Goal::Call(Call { name: c.name.clone(), args: c.args.iter().map(|a| substitute(a, map)).collect() }),
        Goal::Not(inner) => Goal::Not(inner.iter().map(|g| substitute_goal(g, map)).collect()),
    }
}

impl<'a> Expander<'a> {
    fn new(program: &'a Program) -> Result<Self, ValidationError> {
        let mut rules = HashMap::new();
        for r in program.rules() {
            if builtin_paradigm(&r.name).is_some() {
                return Err(verr(None, format!("rule `{}` redefines a builtin predicate", r.name)));
            }
            if rules.insert(r.name.as_str(), r).is_some() {
                return Err(verr(None, format!("rule `{}` has more than one clause; disjunction is unsupported", r.name)));
            }
            let mut seen = BTreeSet::new();
            for p in &r.params {
                if !seen.insert(p) {
                    return Err(verr(None, format!("rule `{}` repeats head variable `{p}`", r.name)));
                }
            }
            let mut body_vars = Vec::new();
            r.body.iter().for_each(|g| g.collect_vars(&mut body_vars));
            if let Some(p) = r.params.iter().find(|p| !body_vars.contains(&p.as_str())) {
                return Err(verr(None, format!("head variable `{p}` of rule `{}` does not occur in its body", r.name)));
            }
        }
        Ok(Expander { rules, stack: Vec::new(), fresh: 0 })
    }

    fn expand(&mut self, goals: &[Goal], loc: Loc) -> Result<Vec<Goal>, ValidationError> {
        let mut out = Vec::new();
        for g in goals {
            let ix = match loc {
                Loc::Top => Some(out.len() + 1),
                Loc::At(i) => Some(i),
                Loc::Rule => None,
            };
            let inner_loc = ix.map_or(Loc::Rule, Loc::At);
            match g {
                Goal::Not(inner) => out.push(Goal::Not(self.expand(inner, inner_loc)?)),
                Goal::Call(c) if builtin_paradigm(&c.name).is_some() => {
                    if !arity_ok(&c.name, c.args.len()) {
                        return Err(verr(ix, format!("wrong arity for `{}`: {} arguments", c.name, c.args.len())));
                    }
                    out.push(g.clone());
                }
                Goal::Call(c) => {
                    let Some(&rule) = self.rules.get(c.name.as_str()) else {
                        return Err(verr(ix, format!("unknown predicate `{}/{}`", c.name, c.args.len())));
                    };
                    if self.stack.contains(&rule.name.as_str()) {
                        return Err(verr(ix, format!("recursion unsupported: `{}` calls itself", rule.name)));
                    }
                    if rule.params.len() != c.args.len() {
                        return Err(verr(
                            ix,
                            format!("rule `{}` takes {} arguments, got {}", rule.name, rule.params.len(), c.args.len()),
                        ));
                    }
                    self.fresh += 1;
                    let mut map: HashMap<String, Term> =
                        rule.params.iter().cloned().zip(c.args.iter().cloned()).collect();
                    let mut locals = Vec::new();
                    rule.body.iter().for_each(|g| g.collect_vars(&mut locals));
                    for v in locals {
                        if !map.contains_key(v) {
                            map.insert(v.to_string(), Term::Var(format!("_{}_{v}", self.fresh)));
                        }
                    }
                    let body: Vec<Goal> = rule.body.iter().map(|g| substitute_goal(g, &map)).collect();
                    self.stack.push(&rule.name);
                    let expanded = self.expand(&body, inner_loc)?;
                    self.stack.pop();
                    out.extend(expanded);
                }
            }
        }
        Ok(out)
    }
}

/// Where errors found while unfolding are reported.
#[derive(Clone, Copy)]
enum Loc {
    /// Query body: each goal reports its own unfolded position.
    Top,
    /// Inside a negation or rule body reached from the query goal at this index.
    At(usize),
    /// A rule body checked on its own.
    Rule,
}

/// Unfolds user rules in the program's single query into builtin goals.
pub fn expand_rules(program: &Program) -> Result<Vec<Goal>, ValidationError> {
    let query = single_query(program)?;
    let mut ex = Expander::new(program)?;
    // Every rule must unfold on its own so cycles are caught even when unused.
    for r in program.rules() {
        ex.stack.push(&r.name);
        ex.expand(&r.body, Loc::Rule)?;
        ex.stack.pop();
    }
    ex.fresh = 0;
    ex.expand(&query.body, Loc::Top)
}

fn single_query(program: &Program) -> Result<&super::ast::Query, ValidationError> {
    let mut queries = program.queries();
    match (queries.next(), queries.next()) {
        (Some(q), None) => Ok(q),
        (None, _) => Err(verr(None, "program has no `:-` query")),
        (Some(_), Some(_)) => Err(verr(None, "program has more than one `:-` query")),
    }
}

/// Checks a program's query for the given paradigm. With a catalog, names it
/// does not know yet are reported as warnings, not errors.
pub fn validate(program: &Program, catalog: Option<&Catalog>, paradigm: Paradigm) -> Result<CheckedQuery, ValidationError> {
    let query = single_query(program)?;
    let goals = expand_rules(program)?;
    let mut warnings = Vec::new();
    for (i, g) in goals.iter().enumerate() {
        check_paradigm(g, paradigm, i + 1)?;
    }
    match paradigm {
        Paradigm::Entity => {
            let mut bound = BTreeSet::new();
            check_entity_conjunction(&goals, &BTreeSet::new(), &mut bound, None, catalog, &mut warnings)?;
        }
        Paradigm::Relation => check_relation(&goals, catalog, &mut warnings)?,
    }
    Ok(CheckedQuery { paradigm, goals, answer_vars: positive_vars(&query.body), warnings })
}

fn check_paradigm(g: &Goal, paradigm: Paradigm, ix: usize) -> Result<(), ValidationError> {
    match g {
        Goal::Not(inner) => {
            if paradigm == Paradigm::Relation {
                return Err(verr(Some(ix), "negation is not available in relation mode; use minus_relational"));
            }
            inner.iter().try_for_each(|g| check_paradigm(g, paradigm, ix))
        }
        Goal::Call(c) => match builtin_paradigm(&c.name) {
            Some(p) if p == paradigm => Ok(()),
            Some(p) => Err(verr(Some(ix), format!("`{}` is a {p}-mode predicate, not usable in {paradigm} mode", c.name))),
            None => Err(verr(Some(ix), format!("unknown predicate `{}/{}`", c.name, c.args.len()))),
        },
    }
}

/// `("category", Id)` with a literal category.
pub(crate) fn entity_term(t: &Term) -> Option<(&str, &Term)> {
    match t {
        Term::Tuple(items) if items.len() == 2 => match (&items[0], &items[1]) {
            (Term::Str(cat), id @ (Term::Var(_) | Term::Int(_))) => Some((cat, id)),
            _ => None,
        },
        _ => None,
    }
}

fn conj_vars(goals: &[Goal], skip: usize) -> BTreeSet<String> {
    goals.iter().enumerate().filter(|(j, _)| *j != skip).flat_map(|(_, g)| g.vars()).collect()
}

fn check_entity_conjunction(
    goals: &[Goal],
    external: &BTreeSet<String>,
    bound: &mut BTreeSet<String>,
    at: Option<usize>,
    catalog: Option<&Catalog>,
    warnings: &mut Vec<String>,
) -> Result<(), ValidationError> {
    for (j, g) in goals.iter().enumerate() {
        let ix = at.or(Some(j + 1));
        match g {
            Goal::Not(inner) => {
                let outside: BTreeSet<String> = external.union(&conj_vars(goals, j)).cloned().collect();
                for v in g.vars() {
                    if outside.contains(&v) && !bound.contains(&v) {
                        return Err(verr(ix, format!("negation needs `{v}` bound by an earlier goal")));
                    }
                }
                let mut inner_bound = bound.clone();
                check_entity_conjunction(inner, &outside, &mut inner_bound, ix, catalog, warnings)?;
            }
            Goal::Call(c) => {
                let entity_args: &[usize] = match c.name.as_str() {
                    "near" | "closeby" => &[0, 1],
                    "distance" => &[0, 1],
                    "entity_type" => &[1],
                    _ => unreachable!("paradigm checked"),
                };
                for &a in entity_args {
                    let Some((cat, id)) = entity_term(&c.args[a]) else {
                        return Err(verr(
                            ix,
                            format!(
                                "unsupported mode for `{}`: argument {} must be a (\"category\", Id) term, got `{}`",
                                c.name,
                                a + 1,
                                c.args[a]
                            ),
                        ));
                    };
                    if let Some(cat_ref) = catalog {
                        if !cat_ref.contains(cat) {
                            warnings.push(format!("goal {}: relation `{cat}` not in catalog yet", ix.unwrap_or(0)));
                        }
                    }
                    if c.name == "distance" {
                        if let Term::Var(v) = id {
                            if !bound.contains(v) {
                                return Err(verr(ix, format!("insufficiently instantiated: distance needs `{v}` bound")));
                            }
                        }
                    }
                }
                if c.name == "distance" && !matches!(c.args[2], Term::Var(_)) {
                    return Err(verr(ix, "distance binds its third argument, which must be a variable"));
                }
                if c.name == "entity_type" {
                    let Term::Atom(t) = &c.args[0] else {
                        return Err(verr(ix, format!("entity_type expects a type name, got `{}`", c.args[0])));
                    };
                    if let Some(cat_ref) = catalog {
                        if cat_ref.type_spec(t).is_err() {
                            warnings.push(format!("goal {}: type `{t}` not in catalog yet", ix.unwrap_or(0)));
                        }
                    }
                }
                bound.extend(g.vars());
            }
        }
    }
    Ok(())
}

fn check_relation(goals: &[Goal], catalog: Option<&Catalog>, warnings: &mut Vec<String>) -> Result<(), ValidationError> {
    let mut bound: BTreeSet<String> = BTreeSet::new();
    for (j, g) in goals.iter().enumerate() {
        let ix = Some(j + 1);
        let Goal::Call(c) = g else { unreachable!("paradigm checked") };
        let b = relation_builtin(&c.name).expect("paradigm checked");
        let mut outputs = Vec::new();
        for (arg, role) in c.args.iter().zip(b.roles) {
            match (role, arg) {
                (InRel, Term::Str(name)) => {
                    if let Some(cat) = catalog {
                        if !cat.contains(name) {
                            warnings.push(format!("goal {}: relation `{name}` not in catalog yet", j + 1));
                        }
                    }
                }
                (InRel, Term::Var(v)) => {
                    if !bound.contains(v) {
                        return Err(verr(ix, format!("unbound input `{v}` to `{}`", c.name)));
                    }
                }
                (OutRel, Term::Var(v)) => {
                    if bound.contains(v) || outputs.contains(v) {
                        return Err(verr(ix, format!("`{v}` is already bound; `{}` needs a fresh output", c.name)));
                    }
                    outputs.push(v.clone());
                }
                (OutRel, other) => {
                    return Err(verr(ix, format!("output of `{}` must be a variable, got `{other}`", c.name)));
                }
                (Attr, Term::Str(_)) => {}
                (AttrPair, Term::List(items)) if items.len() == 2 => {}
                (AttrList, Term::List(items)) if !items.is_empty() => {}
                (TypeName, Term::Atom(t)) => {
                    if let Some(cat) = catalog {
                        if cat.type_spec(t).is_err() {
                            warnings.push(format!("goal {}: type `{t}` not in catalog yet", j + 1));
                        }
                    }
                }
                (role, other) => {
                    let want = match role {
                        InRel => "a relation name or bound variable",
                        Attr => "an attribute name string",
                        AttrPair => "a list of two attribute names",
                        AttrList => "a non-empty list of attribute names",
                        TypeName => "a type name",
                        OutRel => unreachable!(),
                    };
                    return Err(verr(ix, format!("`{}` expects {want}, got `{other}`", c.name)));
                }
            }
        }
        bound.extend(outputs);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlang::parse;

    fn check(text: &str, p: Paradigm) -> Result<CheckedQuery, ValidationError> {
        validate(&parse(text).unwrap(), None, p)
    }

    #[test]
    fn rule_unfolds_with_renamed_locals() {
        let q = check(
            "r(A) :- near((\"a\", A), (\"b\", B)).\n:- r(X).",
            Paradigm::Entity,
        )
        .unwrap();
        assert_eq!(q.goals.len(), 1);
        assert_eq!(q.goals[0].to_string(), "near((\"a\", X), (\"b\", _1_B))");
        assert_eq!(q.answer_vars, vec!["X"]);
    }

    #[test]
    fn rules_unfold_transitively() {
        let q = check(
            "inner(A, B) :- near((\"a\", A), (\"b\", B)).\n\
             outer(A, C) :- inner(A, B), closeby((\"b\", B), (\"c\", C)).\n\
             :- outer(X, Y).",
            Paradigm::Entity,
        )
        .unwrap();
        assert_eq!(q.goals.len(), 2);
    }

    #[test]
    fn recursion_rejected() {
        let err = check("r(A) :- r(A).\n:- r(X).", Paradigm::Entity).unwrap_err();
        assert!(err.message.contains("recursion unsupported"), "{err}");
        let err = check(
            "a(X) :- b(X).\nb(X) :- a(X).\n:- near((\"a\", X), (\"b\", Y)).",
            Paradigm::Entity,
        )
        .unwrap_err();
        assert!(err.message.contains("recursion unsupported"), "{err}");
    }

    #[test]
    fn undefined_predicate_rejected() {
        let err = check(":- near((\"a\", X), (\"b\", Y)), nope(X).", Paradigm::Entity).unwrap_err();
        assert_eq!(err.goal, Some(2));
        assert!(err.message.contains("unknown predicate `nope/1`"));
    }

    #[test]
    fn paradigm_partition() {
        let rel = ":- near_relational(\"a\", \"b\", R).";
        assert!(check(rel, Paradigm::Relation).is_ok());
        let err = check(rel, Paradigm::Entity).unwrap_err();
        assert!(err.message.contains("relation-mode"), "{err}");
        assert!(check(":- near((\"a\", X), (\"b\", Y)).", Paradigm::Relation).is_err());
    }

    #[test]
    fn unbound_relation_input() {
        let err = check(":- near_relational(\"a\", Later, R), entity_type_relational(t, \"b\", Later).", Paradigm::Relation)
            .unwrap_err();
        assert_eq!(err.goal, Some(1));
        assert!(err.message.contains("unbound input `Later`"));
        let err = check(":- near_relational(\"a\", \"b\", R), near_relational(\"a\", \"b\", R).", Paradigm::Relation)
            .unwrap_err();
        assert!(err.message.contains("already bound"));
    }

    #[test]
    fn negation_groundedness() {
        let ok = ":- near((\"a\", A), (\"t\", T)), \\+(near((\"t\", T), (\"t\", O)), entity_type(sig, (\"t\", O))).";
        assert!(check(ok, Paradigm::Entity).is_ok());
        let bad = ":- \\+(near((\"t\", T), (\"t\", O))), near((\"a\", A), (\"t\", T)).";
        let err = check(bad, Paradigm::Entity).unwrap_err();
        assert_eq!(err.goal, Some(1));
        assert!(err.message.contains("`T`"));
    }

    #[test]
    fn bare_variable_is_unsupported_mode() {
        let err = check(":- near(X, Y).", Paradigm::Entity).unwrap_err();
        assert!(err.message.contains("unsupported mode"), "{err}");
    }

    #[test]
    fn distance_needs_bound_entities() {
        assert!(check(":- near((\"a\", A), (\"b\", B)), distance((\"a\", A), (\"b\", B), D).", Paradigm::Entity).is_ok());
        let err = check(":- distance((\"a\", A), (\"b\", B), D).", Paradigm::Entity).unwrap_err();
        assert!(err.message.contains("insufficiently instantiated"));
    }

    #[test]
    fn catalog_names_are_warnings() {
        let cat = Catalog::new();
        let q = validate(&parse(":- near_relational(\"ghost\", \"b\", R).").unwrap(), Some(&cat), Paradigm::Relation).unwrap();
        assert_eq!(q.warnings.len(), 2);
    }

    #[test]
    fn wrong_arity() {
        let err = check(":- near_relational(\"a\", R).", Paradigm::Relation).unwrap_err();
        assert!(err.message.contains("wrong arity"));
    }
}
