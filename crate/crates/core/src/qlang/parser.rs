//! Recursive-descent parser for the clause language.

use thiserror::Error;

use super::ast::{Call, Clause, Goal, Program, Query, Rule, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Var(String),
    Atom(String),
    Str(String),
    Int(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Neck,
    Not,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Atom(a) => format!("atom `{a}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Not => "`\\+`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Cursor {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.i + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.i += 1;
        Some(c)
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut cur = Cursor { chars: text.chars().collect(), i: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    let err = |line, column, message: String| ParseError { line, column, message };
    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, column });
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '%' {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            _ => None,
        };
        if let Some(tok) = single {
            cur.bump();
            push(&mut out, tok);
            continue;
        }
        if c == ':' && cur.peek2() == Some('-') {
            cur.bump();
            cur.bump();
            push(&mut out, Tok::Neck);
            continue;
        }
        if c == '\\' && cur.peek2() == Some('+') {
            cur.bump();
            cur.bump();
            push(&mut out, Tok::Not);
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                let Some(ch) = cur.bump() else {
                    return Err(err(line, column, "unterminated string".into()));
                };
                match ch {
                    '"' => break,
                    '\\' => {
                        let (el, ec) = (cur.line, cur.col);
                        let Some(esc) = cur.bump() else {
                            return Err(err(line, column, "unterminated string".into()));
                        };
                        s.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            '"' => '"',
                            '\\' => '\\',
                            other => return Err(err(el, ec, format!("unknown escape `\\{other}`"))),
                        });
                    }
                    ch => s.push(ch),
                }
            }
            push(&mut out, Tok::Str(s));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                s.push(d);
                cur.bump();
            }
            let v = s.parse().map_err(|_| err(line, column, format!("integer `{s}` out of range")))?;
            push(&mut out, Tok::Int(v));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(d) = cur.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                s.push(d);
                cur.bump();
            }
            push(&mut out, if c.is_ascii_uppercase() { Tok::Var(s) } else { Tok::Atom(s) });
            continue;
        }
        return Err(err(line, column, format!("unexpected character `{c}`")));
    }
    out.push(Spanned { tok: Tok::Eof, line: cur.line, column: cur.col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, column: s.column, message }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error_here(format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut clauses = Vec::new();
        while *self.peek() != Tok::Eof {
            clauses.push(self.clause()?);
        }
        Ok(Program { clauses })
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        if *self.peek() == Tok::Neck {
            self.bump();
            let body = self.body()?;
            self.expect(Tok::Dot, "`,` or `.`")?;
            return Ok(Clause::Query(Query { body }));
        }
        let name = match self.peek() {
            Tok::Atom(a) => a.clone(),
            _ => return Err(self.unexpected("`:-` or a rule head")),
        };
        self.bump();
        let mut params = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                match self.peek().clone() {
                    Tok::Var(v) => {
                        self.bump();
                        params.push(v);
                    }
                    _ => {
                        return Err(self.unexpected("a variable in the rule head (facts are not supported)"))
                    }
                }
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected("`,` or `)`")),
                }
            }
        }
        if *self.peek() == Tok::Dot {
            return Err(self.error_here("facts are not supported; expected `:-`".into()));
        }
        self.expect(Tok::Neck, "`:-`")?;
        let body = self.body()?;
        self.expect(Tok::Dot, "`,` or `.`")?;
        Ok(Clause::Rule(Rule { name, params, body }))
    }

    fn body(&mut self) -> Result<Vec<Goal>, ParseError> {
        let mut goals = vec![self.goal()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            goals.push(self.goal()?);
        }
        Ok(goals)
    }

    fn goal(&mut self) -> Result<Goal, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let inner = self.body()?;
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    Ok(Goal::Not(inner))
                } else {
                    Ok(Goal::Not(vec![self.goal()?]))
                }
            }
            Tok::Atom(name) => {
                self.bump();
                let mut args = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    args.push(self.term()?);
                    loop {
                        match self.peek() {
                            Tok::Comma => {
                                self.bump();
                                args.push(self.term()?);
                            }
                            Tok::RParen => {
                                self.bump();
                                break;
                            }
                            _ => return Err(self.unexpected("`,` or `)`")),
                        }
                    }
                }
                Ok(Goal::Call(Call { name, args }))
            }
            _ => Err(self.unexpected("a goal")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::Atom(a) => {
                self.bump();
                Ok(Term::Atom(a))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Str(s))
            }
            Tok::Int(i) => {
                self.bump();
                Ok(Term::Int(i))
            }
            Tok::LParen => {
                self.bump();
                let mut items = vec![self.term()?];
                self.expect(Tok::Comma, "`,` (tuples have at least two elements)")?;
                items.push(self.term()?);
                loop {
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                            items.push(self.term()?);
                        }
                        Tok::RParen => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.unexpected("`,` or `)`")),
                    }
                }
                Ok(Term::Tuple(items))
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() == Tok::RBracket {
                    self.bump();
                    return Ok(Term::List(items));
                }
                loop {
                    match self.peek().clone() {
                        Tok::Str(s) => {
                            self.bump();
                            items.push(s);
                        }
                        _ => return Err(self.unexpected("a string in the list")),
                    }
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBracket => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.unexpected("`,` or `]`")),
                    }
                }
                Ok(Term::List(items))
            }
            _ => Err(self.unexpected("a term")),
        }
    }
}

/// Parses a whole program. Whitespace is insignificant, clauses end in `.`,
/// `%` starts a line comment.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.program()
}
