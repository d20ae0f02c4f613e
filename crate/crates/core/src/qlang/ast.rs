use std::collections::BTreeSet;
use std::fmt::{self, Write};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Str(String),
    Int(u64),
    Atom(String),
    Tuple(Vec<Term>),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub name: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Call(Call),
    /// Negation-as-failure over a conjunction.
    Not(Vec<Goal>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Goal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub body: Vec<Goal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clause {
    Rule(Rule),
    Query(Query),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub clauses: Vec<Clause>,
}

impl Program {
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.clauses.iter().filter_map(|c| match c {
            Clause::Rule(r) => Some(r),
            Clause::Query(_) => None,
        })
    }

    pub fn queries(&self) -> impl Iterator<Item = &Query> {
        self.clauses.iter().filter_map(|c| match c {
            Clause::Query(q) => Some(q),
            Clause::Rule(_) => None,
        })
    }
}

impl Call {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Call { name: name.into(), args }
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn str(s: &str) -> Term {
        Term::Str(s.to_string())
    }

    /// Variables in order of first occurrence.
    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::Tuple(items) => items.iter().for_each(|t| t.collect_vars(out)),
            _ => {}
        }
    }
}

impl Goal {
    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Goal::Call(c) => c.args.iter().for_each(|t| t.collect_vars(out)),
            Goal::Not(goals) => goals.iter().for_each(|g| g.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.into_iter().map(String::from).collect()
    }
}

/// Variables of a conjunction that occur outside any negation, in order.
pub fn positive_vars(goals: &[Goal]) -> Vec<String> {
    let mut out = Vec::new();
    for g in goals {
        if let Goal::Call(c) = g {
            c.args.iter().for_each(|t| t.collect_vars(&mut out));
        }
    }
    out.into_iter().map(String::from).collect()
}

pub(crate) fn write_string_literal(f: &mut impl Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

fn comma_separated<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Atom(v) => f.write_str(v),
            Term::Str(s) => write_string_literal(f, s),
            Term::Int(i) => write!(f, "{i}"),
            Term::Tuple(items) => {
                f.write_char('(')?;
                comma_separated(f, items)?;
                f.write_char(')')
            }
            Term::List(items) => {
                f.write_char('[')?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_string_literal(f, s)?;
                }
                f.write_char(']')
            }
        }
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_char('(')?;
            comma_separated(f, &self.args)?;
            f.write_char(')')?;
        }
        Ok(())
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Call(c) => write!(f, "{c}"),
            Goal::Not(goals) => {
                f.write_str("\\+(")?;
                comma_separated(f, goals)?;
                f.write_char(')')
            }
        }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Goal], indent: &str) -> fmt::Result {
    for (i, g) in body.iter().enumerate() {
        if i > 0 {
            write!(f, ",\n{indent}")?;
        }
        write!(f, "{g}")?;
    }
    f.write_str(".\n")
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Query(q) => {
                f.write_str(":- ")?;
                write_body(f, &q.body, "   ")
            }
            Clause::Rule(r) => {
                f.write_str(&r.name)?;
                if !r.params.is_empty() {
                    write!(f, "({})", r.params.join(", "))?;
                }
                f.write_str(" :-\n    ")?;
                write_body(f, &r.body, "    ")
            }
        }
    }
}

/// Canonical text: one goal per line, clauses separated by a blank line.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_char('\n')?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}
