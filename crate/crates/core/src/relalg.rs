//! Set-at-a-time operators over relationship-relations.
//!
//! All operators use bag semantics and return unregistered relations named
//! by the caller; registration is the catalog's business.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::store::{CatalogError, EntityRelation, RelationshipRelation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelalgError {
    #[error("attribute `{attr}` not in schema [{schema}] of `{relation}`")]
    UnknownAttribute { attr: String, relation: String, schema: String },
    #[error("output column `{0}` is ambiguous; prefix it with rel1. or rel2.")]
    Ambiguous(String),
    #[error("duplicate output column `{0}`")]
    DuplicateColumn(String),
    #[error("minus needs equal schemas, got [{left}] and [{right}]")]
    SchemaMismatch { left: String, right: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

fn unknown(attr: &str, r: &RelationshipRelation) -> RelalgError {
    RelalgError::UnknownAttribute {
        attr: attr.to_string(),
        relation: r.name().to_string(),
        schema: r.schema().join(", "),
    }
}

fn column(r: &RelationshipRelation, attr: &str) -> Result<usize, RelalgError> {
    r.column(attr).ok_or_else(|| unknown(attr, r))
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn resolve_output(
    r1: &RelationshipRelation,
    r2: &RelationshipRelation,
    name: &str,
) -> Result<(Side, usize, String), RelalgError> {
    if let Some(bare) = name.strip_prefix("rel1.") {
        return Ok((Side::Left, column(r1, bare)?, bare.to_string()));
    }
    if let Some(bare) = name.strip_prefix("rel2.") {
        return Ok((Side::Right, column(r2, bare)?, bare.to_string()));
    }
    match (r1.column(name), r2.column(name)) {
        (Some(_), Some(_)) => Err(RelalgError::Ambiguous(name.to_string())),
        (Some(c), None) => Ok((Side::Left, c, name.to_string())),
        (None, Some(c)) => Ok((Side::Right, c, name.to_string())),
        (None, None) => Err(unknown(name, r1)),
    }
}

/// Hash join on a single attribute present in both inputs.
///
/// Without `out_columns` the result schema is r1's schema followed by r2's
/// minus the join attribute. Rows come out r1-major, r2 order within a key.
pub fn join(
    r1: &RelationshipRelation,
    r2: &RelationshipRelation,
    on: &str,
    out_columns: Option<&[String]>,
    out_name: impl Into<String>,
) -> Result<RelationshipRelation, RelalgError> {
    let c1 = column(r1, on)?;
    let c2 = column(r2, on)?;

    let outputs: Vec<(Side, usize, String)> = match out_columns {
        Some(cols) => cols.iter().map(|c| resolve_output(r1, r2, c)).collect::<Result<_, _>>()?,
        None => {
            let left = (0..r1.arity()).map(|i| (Side::Left, i, r1.schema()[i].clone()));
            let right = (0..r2.arity()).filter(|&i| i != c2).map(|i| (Side::Right, i, r2.schema()[i].clone()));
            left.chain(right).collect()
        }
    };
    for (i, (_, _, n)) in outputs.iter().enumerate() {
        if outputs[..i].iter().any(|(_, _, m)| m == n) {
            return Err(RelalgError::DuplicateColumn(n.clone()));
        }
    }

    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, row) in r2.rows().enumerate() {
        buckets.entry(row[c2]).or_default().push(i);
    }
    let mut data = Vec::new();
    for left in r1.rows() {
        let Some(matches) = buckets.get(&left[c1]) else { continue };
        for &j in matches {
            let right = r2.row(j);
            data.extend(outputs.iter().map(|&(side, c, _)| match side {
                Side::Left => left[c],
                Side::Right => right[c],
            }));
        }
    }
    let lineage = outputs
        .iter()
        .map(|&(side, c, _)| match side {
            Side::Left => r1.lineage()[c].clone(),
            Side::Right => r2.lineage()[c].clone(),
        })
        .collect();
    let schema = outputs.into_iter().map(|(_, _, n)| n).collect();
    Ok(RelationshipRelation::from_flat(out_name, schema, lineage, data)?)
}

/// Restricts every row to `columns`, keeping duplicates and order.
pub fn project(
    r: &RelationshipRelation,
    columns: &[String],
    out_name: impl Into<String>,
) -> Result<RelationshipRelation, RelalgError> {
    let idx: Vec<usize> = columns.iter().map(|c| column(r, c)).collect::<Result<_, _>>()?;
    for (i, c) in columns.iter().enumerate() {
        if columns[..i].contains(c) {
            return Err(RelalgError::DuplicateColumn(c.clone()));
        }
    }
    let mut data = Vec::with_capacity(r.len() * idx.len());
    for row in r.rows() {
        data.extend(idx.iter().map(|&i| row[i]));
    }
    let lineage = idx.iter().map(|&i| r.lineage()[i].clone()).collect();
    Ok(RelationshipRelation::from_flat(out_name, columns.to_vec(), lineage, data)?)
}

/// Rows of r1 whose value tuple does not occur in r2.
pub fn minus(
    r1: &RelationshipRelation,
    r2: &RelationshipRelation,
    out_name: impl Into<String>,
) -> Result<RelationshipRelation, RelalgError> {
    if r1.schema() != r2.schema() {
        return Err(RelalgError::SchemaMismatch { left: r1.schema().join(", "), right: r2.schema().join(", ") });
    }
    let exclude: HashSet<&[u64]> = r2.rows().collect();
    let mut data = Vec::new();
    for row in r1.rows().filter(|row| !exclude.contains(row)) {
        data.extend_from_slice(row);
    }
    Ok(RelationshipRelation::from_flat(out_name, r1.schema().to_vec(), r1.lineage().to_vec(), data)?)
}

/// Semi-join: members of `input` whose id occurs in column `attr` of `r`.
pub fn filter_entities(
    input: &EntityRelation,
    r: &RelationshipRelation,
    attr: &str,
    out_name: impl Into<String>,
) -> Result<EntityRelation, RelalgError> {
    let c = column(r, attr)?;
    let keep: HashSet<u64> = r.rows().map(|row| row[c]).collect();
    let members: Vec<_> = input.members().iter().filter(|e| keep.contains(&e.key.id)).cloned().collect();
    Ok(EntityRelation::new(out_name, Arc::clone(input.category()), members)?)
}

/// Drops repeated rows, keeping first occurrences in order.
pub fn distinct(r: &RelationshipRelation, out_name: impl Into<String>) -> RelationshipRelation {
    let mut seen: HashSet<&[u64]> = HashSet::with_capacity(r.len());
    let mut data = Vec::new();
    for row in r.rows() {
        if seen.insert(row) {
            data.extend_from_slice(row);
        }
    }
    RelationshipRelation::from_flat(out_name, r.schema().to_vec(), r.lineage().to_vec(), data)
        .expect("same schema as a valid relation")
}

/// Every row exactly once, in stored order.
pub fn iterate(r: &RelationshipRelation) -> impl Iterator<Item = &[u64]> + '_ {
    r.rows()
}
