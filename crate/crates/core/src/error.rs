use thiserror::Error;

use crate::qlang::{ParseError, ValidationError};
use crate::relalg::RelalgError;
use crate::spatial_index::IndexError;
use crate::store::{CatalogError, LoadError, TypeSpecError};

/// Any failure surfaced by the public entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Relalg(#[from] RelalgError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    TypeSpec(#[from] TypeSpecError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    /// Evaluation-time failure tied to one unfolded goal.
    #[error("goal {goal}: {message}")]
    Eval { goal: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
