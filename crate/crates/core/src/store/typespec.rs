//! OSM type-code classification.
//!
//! A type spec maps a name such as `school_features` to a union of
//! four-digit codes and inclusive code ranges.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Shipped mapping. The traffic and school feature codes follow the
/// Geofabrik shapefile code list (`traffic` and `pois` layers).
pub const DEFAULT_TYPESPECS: &str = "\
# name = code | lo-hi [, ...]
school = 2082
education = 2080-2089
school_features = 2082
crossing_features = 5204
traffic_signal_features = 5201
";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeSpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("type spec `{0}` has no codes")]
    Empty(String),
    #[error("code range {0}-{1} is not well ordered")]
    BadRange(u16, u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CodeRange {
    pub lo: u16,
    pub hi: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSpec {
    name: String,
    codes: Vec<CodeRange>,
}

impl TypeSpec {
    pub fn new(name: impl Into<String>, codes: Vec<CodeRange>) -> Result<Self, TypeSpecError> {
        let name = name.into();
        if codes.is_empty() {
            return Err(TypeSpecError::Empty(name));
        }
        if let Some(r) = codes.iter().find(|r| r.lo > r.hi) {
            return Err(TypeSpecError::BadRange(r.lo, r.hi));
        }
        Ok(TypeSpec { name, codes })
    }

    pub fn single(name: impl Into<String>, code: u16) -> Self {
        TypeSpec { name: name.into(), codes: vec![CodeRange { lo: code, hi: code }] }
    }

    pub fn range(name: impl Into<String>, lo: u16, hi: u16) -> Result<Self, TypeSpecError> {
        TypeSpec::new(name, vec![CodeRange { lo, hi }])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn codes(&self) -> &[CodeRange] {
        &self.codes
    }

    pub fn matches(&self, code: u16) -> bool {
        self.codes.iter().any(|r| r.lo <= code && code <= r.hi)
    }

    /// Smallest code in the set, used by the synthetic generator.
    pub fn representative(&self) -> u16 {
        self.codes.iter().map(|r| r.lo).min().expect("non-empty by construction")
    }
}

impl fmt::Display for TypeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = ", self.name)?;
        for (i, r) in self.codes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if r.lo == r.hi {
                write!(f, "{}", r.lo)?;
            } else {
                write!(f, "{}-{}", r.lo, r.hi)?;
            }
        }
        Ok(())
    }
}

/// Parses `name = 2082` / `name = 2080-2089, 5204` lines with `#` comments.
pub fn parse_typespecs(text: &str) -> Result<BTreeMap<String, TypeSpec>, TypeSpecError> {
    let mut specs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| TypeSpecError::Syntax { line: line_no, message };
        let (name, rhs) = line
            .split_once('=')
            .ok_or_else(|| syntax("expected `name = codes`".into()))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(syntax(format!("invalid type name `{name}`")));
        }
        let mut codes = Vec::new();
        for part in rhs.split(',') {
            let part = part.trim();
            let (lo, hi) = match part.split_once('-') {
                Some((lo, hi)) => (parse_code(lo, line_no)?, parse_code(hi, line_no)?),
                None => {
                    let c = parse_code(part, line_no)?;
                    (c, c)
                }
            };
            codes.push(CodeRange { lo, hi });
        }
        specs.insert(name.to_string(), TypeSpec::new(name, codes)?);
    }
    Ok(specs)
}

fn parse_code(s: &str, line: usize) -> Result<u16, TypeSpecError> {
    let s = s.trim();
    match s.parse::<u16>() {
        Ok(c) if (1000..=9999).contains(&c) => Ok(c),
        _ => Err(TypeSpecError::Syntax { line, message: format!("`{s}` is not a 4-digit code") }),
    }
}

pub fn default_typespecs() -> BTreeMap<String, TypeSpec> {
    parse_typespecs(DEFAULT_TYPESPECS).expect("shipped type specs parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn school_and_education_defaults() {
        let specs = default_typespecs();
        assert!(specs["school"].matches(2082));
        assert!(specs["education"].matches(2082));
        assert!(specs["education"].matches(2085));
        assert!(!specs["education"].matches(2090));
        assert!(!specs["school"].matches(5204));
    }

    #[test]
    fn unions_and_comments() {
        let specs = parse_typespecs("# header\nroad_stuff = 5201, 5203-5205 # trailing\n").unwrap();
        let s = &specs["road_stuff"];
        assert!(s.matches(5201) && s.matches(5204) && !s.matches(5202));
        assert_eq!(s.to_string(), "road_stuff = 5201, 5203-5205");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_typespecs("x 2082"), Err(TypeSpecError::Syntax { line: 1, .. })));
        assert!(matches!(parse_typespecs("\nx = 20"), Err(TypeSpecError::Syntax { line: 2, .. })));
        assert_eq!(parse_typespecs("x = 2089-2080"), Err(TypeSpecError::BadRange(2089, 2080)));
    }
}
