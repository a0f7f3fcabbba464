//! Automaton document format.
//!
//! ```toml
//! states = ["q0", "q1", "acc", "trap"]
//! initial = "q0"
//! final = ["acc"]
//! trap = ["trap"]
//!
//! [[edges]]
//! from = "q0"
//! to = "q1"
//! guard = "go1 && !do1"
//! weight = 1.0   # optional, defaults to 1
//! ```
//!
//! Guards use the formula syntax restricted to temporal-free operators.

use serde::Deserialize;
use thiserror::Error;

use super::{Fspa, FspaError};
use crate::logic::{parse_guard, ParseError, PredicateTable};
use crate::scalar::{convert, Scalar};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FspaDoc {
    states: Vec<String>,
    initial: String,
    #[serde(rename = "final")]
    finals: Vec<String>,
    #[serde(default)]
    trap: Vec<String>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: String,
    to: String,
    guard: String,
    weight: Option<f64>,
}

#[derive(Debug, Error)]
pub enum FspaLoadError {
    #[error("malformed automaton document: {0}")]
    Document(#[from] toml::de::Error),
    #[error("malformed guard on edge {from} -> {to}: {source}")]
    Guard {
        from: String,
        to: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Structure(#[from] FspaError),
}

/// Parses and validates an automaton document. Returns the automaton together
/// with non-fatal warnings (such as unreachable states).
pub fn load_fspa<T: Scalar>(
    text: &str,
    table: &PredicateTable<T>,
) -> Result<(Fspa<T>, Vec<String>), FspaLoadError> {
    let doc: FspaDoc = toml::from_str(text)?;
    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        let guard = parse_guard(&e.guard, table).map_err(|source| FspaLoadError::Guard {
            from: e.from.clone(),
            to: e.to.clone(),
            source,
        })?;
        let weight: T = convert(e.weight.unwrap_or(1.0));
        edges.push((e.from, e.to, guard, weight));
    }
    let fspa = Fspa::new(doc.states, &doc.initial, &doc.finals, &doc.trap, edges)?;
    let warnings = fspa.warnings();
    Ok((fspa, warnings))
}
